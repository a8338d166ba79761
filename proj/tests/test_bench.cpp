// Copyright 2026 The HyCNN Toolkit Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hycnn/bench.hpp"
#include "json.hpp"

using namespace hycnn;
using namespace hycnn::bench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generator closed forms") {
  GeneratorSpec f1{"f1", 5};
  CHECK(clean_value(f1, Vector(5, 1.0)) == 5.0);
  GeneratorSpec f4{"f4", 3};
  CHECK(clean_value(f4, {-1.0, 2.0, -0.5}) == 3.5);
  GeneratorSpec f5{"f5", 4};
  CHECK(clean_value(f5, {1.0, 1.0, 0.0, 0.0}) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  GeneratorSpec f3{"f3", 2};
  Vector x{0.3, -0.4};
  CHECK(clean_value(f3, x) ==
        doctest::Approx(0.25 + 0.25 * std::sin(20.0 * 0.5)).epsilon(1e-12));
  // f6 is symmetric in x -> -x and at least |x -+ mu|^2.
  GeneratorSpec f6{"f6", 3, 7};
  Vector z{0.2, -0.1, 0.4};
  Vector nz{-0.2, 0.1, -0.4};
  CHECK(clean_value(f6, z) == clean_value(f6, nz));

  // OT maps.
  GeneratorSpec t2{"phi2", 4};
  Vector e1{1.0, 0.0, 0.0, 0.0};
  Vector m2 = ot_map_value(t2, e1);
  CHECK(m2[0] == doctest::Approx(1.0 + 0.5 * std::sin(1.0)).epsilon(1e-15));
  CHECK(m2[1] == 0.0);
  GeneratorSpec t3{"phi3", 2};
  Vector m3 = ot_map_value(t3, {0.5, -2.0});
  CHECK(m3[0] == 1.5);
  CHECK(m3[1] == -3.0);
  GeneratorSpec t4{"phi4", 2};
  Vector m4 = ot_map_value(t4, {0.5, -1.0});
  CHECK(m4[0] == 0.5);
  CHECK(m4[1] == -4.0);

  // Noisy draws sit around the clean signal; the clean column is exact.
  Rng rng(3);
  RegressionData data = generate_regression(f1, 100, 0.5, rng);
  for (int i = 0; i < 100; ++i) {
    Vector xi(data.X.row(i), data.X.row(i) + 5);
    CHECK(std::fabs(data.y_clean[i] - clean_value(f1, xi)) <= 1e-12);
  }
}

TEST_CASE("generator determinism and shapes") {
  GeneratorSpec cb{"checkerboard", 2};
  Rng r1(5), r2(5);
  Matrix a = sample_target(cb, 64, r1);
  Matrix b = sample_target(cb, 64, r2);
  CHECK(a.data() == b.data());
  CHECK(a.cols() == 2);
  GeneratorSpec hm{"halfmoon", 2};
  Rng r3(5);
  Matrix t = sample_target(hm, 200, r3);
  for (int i = 0; i < t.rows(); ++i) CHECK(t(i, 1) >= -1.2);
  GeneratorSpec ring{"gauss-ring", 2};
  Rng r4(5);
  Matrix g = sample_target(ring, 200, r4);
  for (int i = 0; i < g.rows(); ++i) {
    const double rad = std::sqrt(g(i, 0) * g(i, 0) + g(i, 1) * g(i, 1));
    CHECK(rad > 1.5);
    CHECK(rad < 6.5);
  }
}

TEST_CASE("mean and standard error") {
  auto [m1, se1] = mean_se({2.0});
  CHECK(m1 == 2.0);
  CHECK(se1 == 0.0);
  std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  auto [m, se] = mean_se(xs);
  CHECK(m == 2.5);
  // sample std = sqrt(5/3), SE = std / sqrt(4).
  CHECK(se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("config json round trip and hash") {
  ExperimentConfig cfg;
  cfg.task = "regression";
  cfg.generator = {"f2", 7, 3};
  cfg.arch = {"groupmax", 24, 6, "max", 1.0, 0.2};
  cfg.train.lr = Schedule::cosine(0.02, 0.1, 50);
  cfg.seeds = {3, 4, 5};
  ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.generator.id == "f2");
  CHECK(back.generator.d == 7);
  CHECK(back.arch.type == "groupmax");
  CHECK(back.train.lr.kind == Schedule::Kind::Cosine);
  CHECK(back.seeds == cfg.seeds);
  CHECK(config_hash(cfg) == config_hash(back));
  back.n = cfg.n + 1;
  CHECK(config_hash(cfg) != config_hash(back));
}

TEST_CASE("run is deterministic and writes the documented layout") {
  ExperimentConfig cfg;
  cfg.task = "regression";
  cfg.generator = {"f1", 2, 1};
  cfg.n = 128;
  cfg.n_test = 64;
  cfg.sigma = 0.3;
  cfg.arch = {"hycnn", 8, 2, "max", 1.0, 0.2};
  cfg.train.epochs = 5;
  cfg.train.batch_size = 32;
  cfg.seeds = {1, 2};
  cfg.threads = 1;
  const fs::path dir1 = fs::temp_directory_path() / "hycnn_bench_run_a";
  const fs::path dir2 = fs::temp_directory_path() / "hycnn_bench_run_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  cfg.out_dir = dir1.string();
  RunSummary s1 = run(cfg);
  cfg.out_dir = dir2.string();
  RunSummary s2 = run(cfg);
  CHECK(s1.ok);
  CHECK(fs::exists(dir1 / "config.json"));
  CHECK(fs::exists(dir1 / "summary.json"));
  CHECK(fs::exists(dir1 / "trace_seed1.csv"));
  CHECK(fs::exists(dir1 / "checkpoints" / "seed1.json"));
  // Bit-identical CSV bodies across reruns.
  CHECK(slurp(dir1 / "trace_seed1.csv") == slurp(dir2 / "trace_seed1.csv"));
  CHECK(slurp(dir1 / "trace_seed2.csv") == slurp(dir2 / "trace_seed2.csv"));

  // Summary SE equals sample std over sqrt(seeds).
  nlohmann::json j = nlohmann::json::parse(s1.json);
  std::vector<double> metrics;
  for (const auto& row : j["per_seed"]) metrics.push_back(row["metric"]);
  auto [mean, se] = mean_se(metrics);
  CHECK(j["mean"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
  CHECK(j["se"].get<double>() == doctest::Approx(se).epsilon(1e-12));

  // Checkpoints reload and evaluate.
  ConvexNet net = load_net((dir1 / "checkpoints" / "seed1.json").string());
  CHECK(net.input_dim == 2);

  // summarize merges run dirs into one table.
  const std::string table = summarize({dir1.string(), dir2.string()});
  CHECK(table.find("hycnn/max") != std::string::npos);
  CHECK(table.find("f1") != std::string::npos);
  int lines = 0;
  for (char c : table) lines += c == '\n';
  CHECK(lines == 3);  // header + two rows
}

TEST_CASE("ot run writes trace, map and summary") {
  ExperimentConfig cfg;
  cfg.task = "ot";
  cfg.generator = {"phi1", 2, 1};
  cfg.n = 64;
  cfg.n_test = 32;
  cfg.n_valid = 32;
  cfg.arch = {"hycnn", 8, 2, "logsumexp", 1.0, 0.2};
  cfg.ot.outer_T = 4;
  cfg.ot.inner_S = 2;
  cfg.ot.batch_M = 16;
  cfg.ot.lr = Schedule::cosine(1e-2, 0.01, 4);
  cfg.ot.tau = Schedule::constant(1.0);
  cfg.ot.checkpoint_every = 2;
  cfg.ot.val_every = 2;
  cfg.seeds = {1};
  cfg.threads = 1;
  const fs::path dir = fs::temp_directory_path() / "hycnn_bench_ot";
  fs::remove_all(dir);
  cfg.out_dir = dir.string();
  RunSummary rs = run(cfg);
  CHECK(rs.ok);
  CHECK(fs::exists(dir / "trace_seed1.csv"));
  CHECK(fs::exists(dir / "map_seed1.csv"));
  CHECK(fs::exists(dir / "checkpoints" / "seed1_iter1.json"));
  const std::string trace = slurp(dir / "trace_seed1.csv");
  CHECK(trace.rfind("outer_iter,objective,tau,lr,val_sinkhorn", 0) == 0);
}

TEST_CASE("pieces and construct tasks") {
  ExperimentConfig cfg;
  cfg.task = "pieces";
  cfg.arch.gate = "relu";
  cfg.piece_widths = {3, 2};
  cfg.seeds.clear();
  for (uint64_t s = 1; s <= 50; ++s) cfg.seeds.push_back(s);
  const fs::path dir = fs::temp_directory_path() / "hycnn_bench_pieces";
  fs::remove_all(dir);
  cfg.out_dir = dir.string();
  RunSummary rs = run(cfg);
  CHECK(rs.ok);
  nlohmann::json j = nlohmann::json::parse(rs.json);
  CHECK(j["budget"] == 7);
  for (const auto& row : j["per_seed"]) CHECK(row["metric"].get<double>() <= 7.0);

  ExperimentConfig cc;
  cc.task = "construct";
  cc.construct_kind = "quadratic";
  cc.widths = {2, 2};
  const fs::path cdir = fs::temp_directory_path() / "hycnn_bench_construct";
  fs::remove_all(cdir);
  cc.out_dir = cdir.string();
  RunSummary cs = run(cc);
  CHECK(cs.ok);
  nlohmann::json cj = nlohmann::json::parse(cs.json);
  CHECK(cj["certificate"]["claimed_bound"].get<double>() ==
        doctest::Approx(0.0078125).epsilon(1e-15));
  CHECK(cj["certificate"]["pass"].get<bool>());
  CHECK(fs::exists(cdir / "cert.json"));
}
