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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hycnn/bench.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hycnn;
using bench::ExperimentConfig;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<uint64_t> seed_range(int count, const std::string& list) {
  std::vector<uint64_t> seeds;
  if (!list.empty()) {
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
    return seeds;
  }
  for (int i = 1; i <= count; ++i) seeds.push_back(i);
  return seeds;
}

Matrix read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (numeric && !row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("no numeric rows in " + path);
  Matrix X(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw ConfigError("ragged CSV in " + path);
    std::copy(rows[i].begin(), rows[i].end(), X.row(static_cast<int>(i)));
  }
  return X;
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p = bench::resolve_out_dir(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

ExperimentConfig load_config_file(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return bench::config_from_json(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex-network benchmark suite: data generation, training, "
               "approximation certificates, and entropic OT evaluation"};
  app.require_subcommand(1);

  // Shared knobs; subcommands bind the subset they use.
  std::string config_file, out_dir, generator = "f1", arch = "hycnn",
              gate = "max", seed_list, construct_kind, tau_schedule = "constant";
  int d = 1, n = 5000, m = 0, n_test = 1000, n_valid = 1000, width = 48,
      depth = 4, epochs = 100, batch = 1000, seeds = 10, T = 1000, S = 5,
      M = 256, k_pieces = 3, checkpoint_every = 0, val_every = 0, threads = 0;
  double sigma = 0.0, tau = 1.0, alpha = 0.2, lr0 = 1e-2, lr_final = 0.01,
         lambda_cvx = 0.0, eps = 0.1, resolution = 0.01;
  std::vector<int> widths{2, 2};
  std::vector<std::string> dirs;
  std::string cloud_a, cloud_b;
  uint64_t one_seed = 1;
  bool constant_lr = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON config file; flags override");
    cmd->add_option("--out", out_dir, "output directory (relative paths resolve against HYCNN_OUT_ROOT)");
    cmd->add_option("--threads", threads, "worker threads across seeds");
  };

  CLI::App* gen = app.add_subcommand("gen", "sample a dataset to CSV");
  add_common(gen);
  gen->add_option("--generator", generator, "f1..f6, phi1..phi4, checkerboard, halfmoon, gauss-ring");
  gen->add_option("--d", d);
  gen->add_option("--n", n);
  gen->add_option("--sigma", sigma);
  gen->add_option("--seed", one_seed);

  CLI::App* reg = app.add_subcommand("train-regression", "minibatch Adam regression runs");
  add_common(reg);
  reg->add_option("--generator", generator);
  reg->add_option("--d", d);
  reg->add_option("--n", n);
  reg->add_option("--n-test", n_test);
  reg->add_option("--sigma", sigma);
  reg->add_option("--arch", arch, "hycnn|icnn|icnnq|groupmax|mlp");
  reg->add_option("--width", width);
  reg->add_option("--depth", depth);
  reg->add_option("--gate", gate);
  reg->add_option("--tau", tau);
  reg->add_option("--alpha", alpha);
  reg->add_option("--epochs", epochs);
  reg->add_option("--batch", batch);
  reg->add_option("--lr", lr0);
  reg->add_option("--seeds", seeds, "number of seeds (1..N)");
  reg->add_option("--seed-list", seed_list, "explicit comma-separated seeds");

  CLI::App* ot = app.add_subcommand("train-ot", "saddle-point OT map estimation runs");
  add_common(ot);
  ot->add_option("--generator", generator);
  ot->add_option("--d", d);
  ot->add_option("--n", n);
  ot->add_option("--m", m);
  ot->add_option("--n-test", n_test);
  ot->add_option("--n-valid", n_valid);
  ot->add_option("--arch", arch);
  ot->add_option("--width", width);
  ot->add_option("--depth", depth);
  ot->add_option("--gate", gate, "logsumexp for hycnn, softplus/relu for icnn variants");
  ot->add_option("--tau", tau, "gate temperature (start value under --tau-schedule cyclic)");
  ot->add_option("--tau-schedule", tau_schedule, "constant|cyclic");
  ot->add_option("--T", T);
  ot->add_option("--S", S);
  ot->add_option("--M", M);
  ot->add_option("--lr", lr0);
  ot->add_option("--lr-final-ratio", lr_final);
  ot->add_flag("--constant-lr", constant_lr);
  ot->add_option("--lambda-cvx", lambda_cvx);
  ot->add_option("--eps", eps, "validation Sinkhorn regularization");
  ot->add_option("--checkpoint-every", checkpoint_every);
  ot->add_option("--val-every", val_every);
  ot->add_option("--seeds", seeds);
  ot->add_option("--seed-list", seed_list);

  CLI::App* diag = app.add_subcommand("init-diagnostics", "per-layer signal statistics at initialization");
  add_common(diag);
  diag->add_option("--depth", depth);
  diag->add_option("--width", width);
  diag->add_option("--d", d);
  diag->add_option("--seeds", seeds);
  diag->add_option("--seed-list", seed_list);

  CLI::App* construct = app.add_subcommand("construct", "build an approximation network and certify it");
  add_common(construct);
  construct->add_option("kind", construct_kind, "quadratic|quadratic2|monomial|multiquad")
      ->required();
  construct->add_option("--widths", widths, "per-layer widths (quadratic)")
      ->delimiter(',');
  construct->add_option("--L", depth);
  construct->add_option("--n", n);
  construct->add_option("--m", width);
  construct->add_option("--d", d);

  CLI::App* pieces = app.add_subcommand("pieces", "kink counts of random 1-D ICNNs");
  add_common(pieces);
  pieces->add_option("--arch", arch);
  pieces->add_option("--gate", gate, "relu|leaky_relu");
  pieces->add_option("--alpha", alpha);
  pieces->add_option("--widths", widths)->delimiter(',');
  pieces->add_option("--seeds", seeds);
  pieces->add_option("--seed-list", seed_list);

  CLI::App* lower = app.add_subcommand("lower-bound", "brute-force convex k-piece approximation search");
  add_common(lower);
  lower->add_option("--k", k_pieces)->required();
  lower->add_option("--resolution", resolution);

  CLI::App* embed = app.add_subcommand("embed-check", "architecture embedding agreement checks");
  add_common(embed);
  embed->add_option("--seed", one_seed);

  CLI::App* sink = app.add_subcommand("sinkhorn-eval", "entropic OT value and divergence between clouds");
  add_common(sink);
  sink->add_option("--a", cloud_a, "CSV of the first cloud");
  sink->add_option("--b", cloud_b, "CSV of the second cloud");
  sink->add_option("--generator", generator, "used when no CSVs are given");
  sink->add_option("--d", d);
  sink->add_option("--n", n);
  sink->add_option("--seed", one_seed);
  sink->add_option("--eps", eps);

  CLI::App* merge = app.add_subcommand("summarize", "merge run summaries into one table");
  add_common(merge);
  merge->add_option("dirs", dirs, "run directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config_file(config_file);
    auto has = [](CLI::App* cmd, const std::string& name) {
      const CLI::Option* opt = cmd->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    auto fill_arch = [&](CLI::App* cmd) {
      if (has(cmd, "--arch")) cfg.arch.type = arch;
      if (has(cmd, "--width")) cfg.arch.width = width;
      if (has(cmd, "--depth")) cfg.arch.depth = depth;
      if (has(cmd, "--gate")) cfg.arch.gate = gate;
      if (has(cmd, "--tau")) cfg.arch.tau = tau;
      if (has(cmd, "--alpha")) cfg.arch.alpha = alpha;
    };
    auto fill_gen = [&](CLI::App* cmd) {
      if (has(cmd, "--generator")) cfg.generator.id = generator;
      if (has(cmd, "--d")) cfg.generator.d = d;
      if (cfg.generator.id.empty()) cfg.generator.id = generator;
    };
    auto fill_seeds = [&](CLI::App* cmd) {
      if (has(cmd, "--seeds") || has(cmd, "--seed-list") || cfg.seeds.empty())
        cfg.seeds = seed_range(seeds, seed_list);
    };
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;

    if (gen->parsed()) {
      fill_gen(gen);
      Rng rng(one_seed);
      std::ostringstream csv;
      if (cfg.generator.id[0] == 'f') {
        cfg.generator.mu_seed = one_seed;
        bench::RegressionData data =
            bench::generate_regression(cfg.generator, n, sigma, rng);
        for (int c = 0; c < cfg.generator.d; ++c) csv << 'x' << c << ',';
        csv << "y,y_clean\n";
        for (int i = 0; i < n; ++i) {
          for (int c = 0; c < cfg.generator.d; ++c)
            csv << fmt(data.X(i, c)) << ',';
          csv << fmt(data.y[i]) << ',' << fmt(data.y_clean[i]) << '\n';
        }
        write_text(cfg.out_dir.empty() ? "data.csv" : cfg.out_dir + "/data.csv",
                   csv.str());
      } else {
        Matrix src = bench::sample_source(cfg.generator, n, rng);
        Matrix tgt = bench::sample_target(cfg.generator, n, rng);
        const int dim = src.cols();
        std::ostringstream s1, s2;
        for (int c = 0; c < dim; ++c) s1 << 'x' << c << (c + 1 < dim ? "," : "\n");
        for (int c = 0; c < dim; ++c) s2 << 'x' << c << (c + 1 < dim ? "," : "\n");
        for (int i = 0; i < n; ++i)
          for (int c = 0; c < dim; ++c)
            s1 << fmt(src(i, c)) << (c + 1 < dim ? "," : "\n");
        for (int i = 0; i < n; ++i)
          for (int c = 0; c < dim; ++c)
            s2 << fmt(tgt(i, c)) << (c + 1 < dim ? "," : "\n");
        const std::string base = cfg.out_dir.empty() ? "." : cfg.out_dir;
        write_text(base + "/source.csv", s1.str());
        write_text(base + "/target.csv", s2.str());
      }
      return 0;
    }

    if (reg->parsed()) {
      cfg.task = "regression";
      fill_gen(reg);
      fill_arch(reg);
      fill_seeds(reg);
      if (has(reg, "--n")) cfg.n = n;
      if (has(reg, "--n-test")) cfg.n_test = n_test;
      if (has(reg, "--sigma")) cfg.sigma = sigma;
      if (has(reg, "--epochs")) cfg.train.epochs = epochs;
      if (has(reg, "--batch")) cfg.train.batch_size = batch;
      if (has(reg, "--lr")) cfg.train.lr = Schedule::constant(lr0);
      bench::RunSummary rs = bench::run(cfg);
      std::cout << rs.json << '\n';
      return rs.ok ? 0 : 1;
    }

    if (ot->parsed()) {
      cfg.task = "ot";
      fill_gen(ot);
      fill_arch(ot);
      fill_seeds(ot);
      if (cfg.generator.id[0] == 'f') cfg.generator.id = "phi1";
      if (has(ot, "--n")) cfg.n = n;
      if (has(ot, "--m")) cfg.m = m;
      if (has(ot, "--n-test")) cfg.n_test = n_test;
      if (has(ot, "--n-valid")) cfg.n_valid = n_valid;
      if (has(ot, "--T")) cfg.ot.outer_T = T;
      if (has(ot, "--S")) cfg.ot.inner_S = S;
      if (has(ot, "--M")) cfg.ot.batch_M = M;
      cfg.ot.lr = constant_lr ? Schedule::constant(lr0)
                              : Schedule::cosine(lr0, lr_final, cfg.ot.outer_T);
      if (tau_schedule == "cyclic")
        cfg.ot.tau = Schedule::cyclic_cosine(tau, 100, 0.8, 0.1, 0.7);
      else
        cfg.ot.tau = Schedule::constant(tau);
      if (has(ot, "--lambda-cvx")) cfg.ot.lambda_cvx = lambda_cvx;
      if (has(ot, "--eps")) cfg.ot.val_eps = eps;
      if (has(ot, "--checkpoint-every")) cfg.ot.checkpoint_every = checkpoint_every;
      if (has(ot, "--val-every")) cfg.ot.val_every = val_every;
      // The gate default depends on the architecture family.
      if (!has(ot, "--gate"))
        cfg.arch.gate = cfg.arch.type == "hycnn" || cfg.arch.type == "groupmax"
                            ? "logsumexp"
                            : "softplus";
      bench::RunSummary rs = bench::run(cfg);
      std::cout << rs.json << '\n';
      return rs.ok ? 0 : 1;
    }

    if (diag->parsed()) {
      cfg.task = "init-diagnostics";
      fill_seeds(diag);
      if (has(diag, "--depth")) cfg.diag_depth = depth;
      if (has(diag, "--width")) cfg.diag_width = width;
      if (has(diag, "--d")) cfg.generator.d = d;
      bench::RunSummary rs = bench::run(cfg);
      std::cout << rs.json << '\n';
      return rs.ok ? 0 : 1;
    }

    if (construct->parsed()) {
      cfg.task = "construct";
      cfg.construct_kind = construct_kind;
      if (has(construct, "--widths")) cfg.widths = widths;
      if (has(construct, "--L")) cfg.cons_L = depth;
      if (has(construct, "--n")) cfg.mono_n = n;
      if (has(construct, "--m")) cfg.cons_m = width;
      if (has(construct, "--d")) cfg.cons_d = d;
      if (cfg.out_dir.empty()) cfg.out_dir = "construct-" + construct_kind;
      bench::RunSummary rs = bench::run(cfg);
      std::cout << rs.json << '\n';
      return rs.ok ? 0 : 1;
    }

    if (pieces->parsed()) {
      cfg.task = "pieces";
      fill_arch(pieces);
      fill_seeds(pieces);
      if (has(pieces, "--widths")) cfg.piece_widths = widths;
      if (cfg.out_dir.empty()) cfg.out_dir = "pieces";
      bench::RunSummary rs = bench::run(cfg);
      std::cout << rs.json << '\n';
      return rs.ok ? 0 : 1;
    }

    if (lower->parsed()) {
      const double found = lower_bound_search(k_pieces, resolution);
      nlohmann::json j{{"k", k_pieces},
                       {"resolution", resolution},
                       {"found", found},
                       {"theory", 1.0 / (8.0 * k_pieces * k_pieces)}};
      std::cout << j.dump(2) << '\n';
      if (!out_dir.empty()) write_text(out_dir + "/lower_bound.json", j.dump(2));
      return 0;
    }

    if (embed->parsed()) {
      cfg.task = "embed";
      cfg.seeds = {one_seed};
      if (cfg.out_dir.empty()) cfg.out_dir = "embed-check";
      bench::RunSummary rs = bench::run(cfg);
      std::cout << rs.json << '\n';
      return rs.ok ? 0 : 1;
    }

    if (sink->parsed()) {
      Matrix a, b;
      if (!cloud_a.empty() && !cloud_b.empty()) {
        a = read_cloud_csv(cloud_a);
        b = read_cloud_csv(cloud_b);
      } else {
        fill_gen(sink);
        Rng rng(one_seed);
        a = bench::sample_source(cfg.generator, n, rng);
        b = cfg.generator.regression() ? bench::sample_source(cfg.generator, n, rng)
                                       : bench::sample_target(cfg.generator, n, rng);
      }
      SinkhornResult res = sinkhorn(a, b, eps);
      const double div = sinkhorn_divergence(a, b, eps);
      nlohmann::json j{{"eps", eps},
                       {"value", res.value},
                       {"iterations", res.iterations},
                       {"converged", res.converged},
                       {"divergence", div}};
      std::cout << j.dump(2) << '\n';
      if (!out_dir.empty()) write_text(out_dir + "/sinkhorn.json", j.dump(2));
      return 0;
    }

    if (merge->parsed()) {
      const std::string csv = bench::summarize(dirs);
      if (!out_dir.empty())
        write_text(out_dir + "/table.csv", csv);
      else
        std::cout << csv;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
