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

#include "hycnn/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <atomic>
#include <future>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace hycnn::bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vector row_of(const Matrix& X, int i) {
  return Vector(X.row(i), X.row(i) + X.cols());
}

Vector draw_mu(const GeneratorSpec& spec) {
  Rng rng(spec.mu_seed ^ 0x5bd1e995u);
  Vector mu(spec.d);
  const double sd = 1.0 / std::sqrt(static_cast<double>(spec.d));
  for (auto& v : mu) v = sd * rng.normal();
  return mu;
}

}  // namespace

double clean_value(const GeneratorSpec& spec, const Vector& x) {
  if (static_cast<int>(x.size()) != spec.d)
    throw ContractViolation("clean_value: dimension mismatch");
  if (spec.id == "f1") {
    return dot(x, x);
  } else if (spec.id == "f2") {
    double acc = 0.0;
    for (double v : x) acc += v * v * v * v;
    return acc;
  } else if (spec.id == "f3") {
    const double sq = dot(x, x);
    return sq + 0.25 * std::sin(20.0 * std::sqrt(sq));
  } else if (spec.id == "f4") {
    double acc = 0.0;
    for (double v : x) acc += std::fabs(v);
    return acc;
  } else if (spec.id == "f5") {
    double acc = 0.0;
    for (double v : x) acc += std::fabs(v);
    return std::exp(acc / std::sqrt(static_cast<double>(spec.d)));
  } else if (spec.id == "f6") {
    const Vector mu = draw_mu(spec);
    double minus = 0.0, plus = 0.0;
    for (int c = 0; c < spec.d; ++c) {
      minus += (x[c] - mu[c]) * (x[c] - mu[c]);
      plus += (x[c] + mu[c]) * (x[c] + mu[c]);
    }
    return std::max(minus, plus);
  }
  throw ConfigError("unknown regression generator: " + spec.id);
}

Vector ot_map_value(const GeneratorSpec& spec, const Vector& x) {
  Vector out(x.size());
  if (spec.id == "phi1") {
    out = x;
  } else if (spec.id == "phi2") {
    for (size_t i = 0; i < x.size(); ++i)
      out[i] = (1.0 + 0.5 * std::sin(static_cast<double>(i + 1))) * x[i];
  } else if (spec.id == "phi3") {
    for (size_t i = 0; i < x.size(); ++i) {
      const double sign = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
      out[i] = x[i] + sign;
    }
  } else if (spec.id == "phi4") {
    for (size_t i = 0; i < x.size(); ++i) out[i] = 4.0 * x[i] * x[i] * x[i];
  } else {
    throw ConfigError("unknown OT generator: " + spec.id);
  }
  return out;
}

RegressionData generate_regression(const GeneratorSpec& spec, int n,
                                   double sigma, Rng& rng) {
  if (!spec.regression())
    throw ConfigError("generator is not a regression target: " + spec.id);
  RegressionData data;
  data.X = Matrix(n, spec.d);
  data.y.resize(n);
  data.y_clean.resize(n);
  Vector x(spec.d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < spec.d; ++c) {
      x[c] = rng.uniform(-1.0, 1.0);
      data.X(i, c) = x[c];
    }
    data.y_clean[i] = clean_value(spec, x);
    data.y[i] = data.y_clean[i] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
  }
  return data;
}

namespace {

Matrix sample_shape(const std::string& id, bool target, int n, Rng& rng) {
  Matrix X(n, 2);
  if (id == "checkerboard") {
    // Unit squares of side 2 on a step-2 grid; the five source cells form
    // the odd pattern, the four target cells the even one.
    static const double src_centers[5][2] = {
        {0, 0}, {2, 2}, {-2, 2}, {2, -2}, {-2, -2}};
    static const double tgt_centers[4][2] = {{2, 0}, {-2, 0}, {0, 2}, {0, -2}};
    for (int i = 0; i < n; ++i) {
      if (target) {
        const auto& c = tgt_centers[rng.u64() % 4];
        X(i, 0) = c[0] + rng.uniform(-1.0, 1.0);
        X(i, 1) = c[1] + rng.uniform(-1.0, 1.0);
      } else {
        const auto& c = src_centers[rng.u64() % 5];
        X(i, 0) = c[0] + rng.uniform(-1.0, 1.0);
        X(i, 1) = c[1] + rng.uniform(-1.0, 1.0);
      }
    }
    return X;
  }
  if (id == "halfmoon") {
    if (!target) {
      for (auto& v : X.data()) v = rng.normal();
      return X;
    }
    // Noisy upper half-circle, radius 2, centered at (0, -0.5).
    for (int i = 0; i < n; ++i) {
      const double theta = rng.uniform(0.0, kPi);
      const double r = 2.0 + 0.15 * rng.normal();
      X(i, 0) = r * std::cos(theta);
      X(i, 1) = r * std::sin(theta) - 0.5;
    }
    return X;
  }
  if (id == "gauss-ring") {
    if (!target) {
      for (auto& v : X.data()) v = rng.normal();
      return X;
    }
    // Eight Gaussians of scale 0.25 on a radius-4 ring.
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rng.u64() % 8);
      const double theta = 2.0 * kPi * k / 8.0;
      X(i, 0) = 4.0 * std::cos(theta) + 0.25 * rng.normal();
      X(i, 1) = 4.0 * std::sin(theta) + 0.25 * rng.normal();
    }
    return X;
  }
  throw ConfigError("unknown shape generator: " + id);
}

}  // namespace

Matrix sample_source(const GeneratorSpec& spec, int n, Rng& rng) {
  if (spec.shape2d()) return sample_shape(spec.id, false, n, rng);
  Matrix X(n, spec.d);
  if (spec.id == "phi4") {
    for (auto& v : X.data()) v = rng.uniform(-1.0, 1.0);
  } else if (spec.ot_map()) {
    for (auto& v : X.data()) v = rng.normal();
  } else {
    for (auto& v : X.data()) v = rng.uniform(-1.0, 1.0);
  }
  return X;
}

Matrix sample_target(const GeneratorSpec& spec, int n, Rng& rng) {
  if (spec.shape2d()) return sample_shape(spec.id, true, n, rng);
  if (!spec.ot_map())
    throw ConfigError("generator has no target distribution: " + spec.id);
  Matrix X = sample_source(spec, n, rng);
  Matrix Y(n, spec.d);
  for (int i = 0; i < n; ++i) {
    Vector t = ot_map_value(spec, row_of(X, i));
    std::copy(t.begin(), t.end(), Y.row(i));
  }
  return Y;
}

// --- Arch helpers -----------------------------------------------------------

GateSpec gate_of(const ArchSpec& arch) {
  if (arch.gate == "max") return GateSpec::max_gate();
  if (arch.gate == "logsumexp") return GateSpec::logsumexp(arch.tau);
  if (arch.gate == "relu") return GateSpec::relu();
  if (arch.gate == "leaky_relu") return GateSpec::leaky_relu(arch.alpha);
  if (arch.gate == "softplus") return GateSpec::softplus_gate(arch.tau);
  throw ConfigError("unknown gate: " + arch.gate);
}

ConvexNet init_net(const ArchSpec& arch, int input_dim, Rng& rng, bool critic) {
  const std::vector<int> shape(arch.depth, arch.width);
  const GateSpec gate = gate_of(arch);
  if (arch.type == "hycnn") return init_hycnn(shape, input_dim, rng, gate);
  if (arch.type == "groupmax") return init_groupmax(shape, input_dim, rng, gate);
  if (arch.type == "mlp") return init_mlp(shape, input_dim, rng, gate);
  if (arch.type == "icnn" || arch.type == "icnnq")
    return init_icnn_hoedt(shape, input_dim, rng,
                           critic ? WeightStyle::Gaussian
                                  : WeightStyle::LogNormal,
                           gate, arch.type == "icnnq");
  throw ConfigError("unknown architecture: " + arch.type);
}

// --- Config serialization -----------------------------------------------------

namespace {

json schedule_to_json(const Schedule& s) {
  json j;
  switch (s.kind) {
    case Schedule::Kind::Constant:
      j["kind"] = "constant";
      j["v0"] = s.v0;
      break;
    case Schedule::Kind::Cosine:
      j["kind"] = "cosine";
      j["v0"] = s.v0;
      j["final_ratio"] = s.final_ratio;
      j["T"] = s.horizon;
      break;
    case Schedule::Kind::CyclicCosine:
      j["kind"] = "cyclic";
      j["v0"] = s.v0;
      j["cycle_len"] = s.cycle_len;
      j["decay_per_cycle"] = s.decay_per_cycle;
      j["floor_ratio"] = s.floor_ratio;
      j["floor_at_fraction"] = s.floor_at_fraction;
      break;
  }
  return j;
}

Schedule schedule_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return Schedule::constant(j.at("v0").get<double>());
  if (kind == "cosine")
    return Schedule::cosine(j.at("v0").get<double>(),
                            j.at("final_ratio").get<double>(),
                            j.at("T").get<long>());
  if (kind == "cyclic")
    return Schedule::cyclic_cosine(
        j.at("v0").get<double>(), j.at("cycle_len").get<long>(),
        j.at("decay_per_cycle").get<double>(), j.at("floor_ratio").get<double>(),
        j.at("floor_at_fraction").get<double>());
  throw ConfigError("unknown schedule kind: " + kind);
}

json arch_to_json(const ArchSpec& a) {
  return json{{"type", a.type}, {"width", a.width}, {"depth", a.depth},
              {"gate", a.gate}, {"tau", a.tau},     {"alpha", a.alpha}};
}

ArchSpec arch_from_json(const json& j) {
  ArchSpec a;
  a.type = j.value("type", a.type);
  a.width = j.value("width", a.width);
  a.depth = j.value("depth", a.depth);
  a.gate = j.value("gate", a.gate);
  a.tau = j.value("tau", a.tau);
  a.alpha = j.value("alpha", a.alpha);
  return a;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["task"] = cfg.task;
  j["generator"] = {{"id", cfg.generator.id},
                    {"d", cfg.generator.d},
                    {"mu_seed", cfg.generator.mu_seed}};
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["sigma"] = cfg.sigma;
  j["arch"] = arch_to_json(cfg.arch);
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"lr", schedule_to_json(cfg.train.lr)},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"standardize", cfg.train.standardize}};
  j["n_test"] = cfg.n_test;
  j["ot"] = {{"outer_T", cfg.ot.outer_T},
             {"inner_S", cfg.ot.inner_S},
             {"batch_M", cfg.ot.batch_M},
             {"lr", schedule_to_json(cfg.ot.lr)},
             {"tau", schedule_to_json(cfg.ot.tau)},
             {"beta1", cfg.ot.beta1},
             {"beta2", cfg.ot.beta2},
             {"lambda_cvx", cfg.ot.lambda_cvx},
             {"checkpoint_every", cfg.ot.checkpoint_every},
             {"val_every", cfg.ot.val_every},
             {"val_eps", cfg.ot.val_eps}};
  j["n_valid"] = cfg.n_valid;
  j["diag_depth"] = cfg.diag_depth;
  j["diag_width"] = cfg.diag_width;
  j["construct_kind"] = cfg.construct_kind;
  j["widths"] = cfg.widths;
  j["mono_n"] = cfg.mono_n;
  j["cons_L"] = cfg.cons_L;
  j["cons_m"] = cfg.cons_m;
  j["cons_d"] = cfg.cons_d;
  j["piece_widths"] = cfg.piece_widths;
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.task = j.value("task", cfg.task);
  if (j.contains("generator")) {
    cfg.generator.id = j["generator"].value("id", cfg.generator.id);
    cfg.generator.d = j["generator"].value("d", cfg.generator.d);
    cfg.generator.mu_seed = j["generator"].value("mu_seed", cfg.generator.mu_seed);
  }
  cfg.n = j.value("n", cfg.n);
  cfg.m = j.value("m", cfg.m);
  cfg.sigma = j.value("sigma", cfg.sigma);
  if (j.contains("arch")) cfg.arch = arch_from_json(j["arch"]);
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    if (t.contains("lr")) cfg.train.lr = schedule_from_json(t["lr"]);
    cfg.train.beta1 = t.value("beta1", cfg.train.beta1);
    cfg.train.beta2 = t.value("beta2", cfg.train.beta2);
    cfg.train.standardize = t.value("standardize", cfg.train.standardize);
  }
  cfg.n_test = j.value("n_test", cfg.n_test);
  if (j.contains("ot")) {
    const auto& t = j["ot"];
    cfg.ot.outer_T = t.value("outer_T", cfg.ot.outer_T);
    cfg.ot.inner_S = t.value("inner_S", cfg.ot.inner_S);
    cfg.ot.batch_M = t.value("batch_M", cfg.ot.batch_M);
    if (t.contains("lr")) cfg.ot.lr = schedule_from_json(t["lr"]);
    if (t.contains("tau")) cfg.ot.tau = schedule_from_json(t["tau"]);
    cfg.ot.beta1 = t.value("beta1", cfg.ot.beta1);
    cfg.ot.beta2 = t.value("beta2", cfg.ot.beta2);
    cfg.ot.lambda_cvx = t.value("lambda_cvx", cfg.ot.lambda_cvx);
    cfg.ot.checkpoint_every = t.value("checkpoint_every", cfg.ot.checkpoint_every);
    cfg.ot.val_every = t.value("val_every", cfg.ot.val_every);
    cfg.ot.val_eps = t.value("val_eps", cfg.ot.val_eps);
  }
  cfg.n_valid = j.value("n_valid", cfg.n_valid);
  cfg.diag_depth = j.value("diag_depth", cfg.diag_depth);
  cfg.diag_width = j.value("diag_width", cfg.diag_width);
  cfg.construct_kind = j.value("construct_kind", cfg.construct_kind);
  if (j.contains("widths")) cfg.widths = j["widths"].get<std::vector<int>>();
  cfg.mono_n = j.value("mono_n", cfg.mono_n);
  cfg.cons_L = j.value("cons_L", cfg.cons_L);
  cfg.cons_m = j.value("cons_m", cfg.cons_m);
  cfg.cons_d = j.value("cons_d", cfg.cons_d);
  if (j.contains("piece_widths"))
    cfg.piece_widths = j["piece_widths"].get<std::vector<int>>();
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = config_to_json(cfg);
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string resolve_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  if (p.is_absolute()) return p.string();
  const char* root = std::getenv("HYCNN_OUT_ROOT");
  if (root && *root) return (fs::path(root) / p).string();
  return p.string();
}

// --- Runners ------------------------------------------------------------------

namespace {

struct SeedOutcome {
  uint64_t seed = 0;
  double metric = 0.0;
  bool diverged = false;
  json extra;  // task-specific payload
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

int pick_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 2;
}

// Runs fn(seed) over all seeds with bounded parallelism; results come back
// in seed order.
template <typename Fn>
std::vector<SeedOutcome> run_seeds(const ExperimentConfig& cfg, Fn&& fn) {
  const int threads = std::max(1, std::min<int>(pick_threads(cfg),
                                                static_cast<int>(cfg.seeds.size())));
  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  if (threads == 1) {
    for (size_t i = 0; i < cfg.seeds.size(); ++i) outcomes[i] = fn(cfg.seeds[i]);
    return outcomes;
  }
  std::vector<std::future<void>> futures;
  std::atomic<size_t> next{0};
  for (int t = 0; t < threads; ++t) {
    futures.push_back(std::async(std::launch::async, [&]() {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= cfg.seeds.size()) break;
        outcomes[i] = fn(cfg.seeds[i]);
      }
    }));
  }
  for (auto& f : futures) f.get();
  return outcomes;
}

json summary_header(const ExperimentConfig& cfg, const char* metric_name) {
  json j;
  j["task"] = cfg.task;
  j["metric"] = metric_name;
  j["config"] = json::parse(config_to_json(cfg));
  j["config_hash"] = config_hash(cfg);
  return j;
}

RunSummary finalize_summary(const ExperimentConfig& cfg, json j,
                            const std::vector<SeedOutcome>& outcomes,
                            const fs::path& dir) {
  json per_seed = json::array();
  std::vector<double> metrics;
  int diverged = 0;
  for (const auto& o : outcomes) {
    json row{{"seed", o.seed}, {"metric", o.metric}, {"diverged", o.diverged}};
    if (!o.extra.is_null()) row["extra"] = o.extra;
    per_seed.push_back(std::move(row));
    metrics.push_back(o.metric);
    diverged += o.diverged ? 1 : 0;
  }
  const auto [mean, se] = mean_se(metrics);
  j["per_seed"] = std::move(per_seed);
  j["mean"] = mean;
  j["se"] = se;
  j["diverged_count"] = diverged;
  RunSummary rs;
  rs.json = j.dump(2);
  rs.ok = diverged == 0;
  write_file(dir / "summary.json", rs.json);
  return rs;
}

SeedOutcome run_regression_seed(const ExperimentConfig& cfg, uint64_t seed,
                                const fs::path& dir) {
  Rng base(seed);
  Rng data_rng = base.split(1);
  Rng init_rng = base.split(2);
  Rng train_rng = base.split(3);
  Rng test_rng = base.split(4);

  GeneratorSpec gen = cfg.generator;
  gen.mu_seed = seed;  // fresh target parameters per run
  RegressionData data = generate_regression(gen, cfg.n, cfg.sigma, data_rng);
  ConvexNet net = init_net(cfg.arch, gen.d, init_rng);
  RegressionResult res = train_regression(net, data.X, data.y, cfg.train, train_rng);

  // Trace CSV.
  std::ostringstream csv;
  csv << "epoch,train_mse,lr,tau\n";
  for (const auto& row : res.trace)
    csv << row.epoch << ',' << fmt(row.train_mse) << ',' << fmt(row.lr) << ','
        << fmt(row.tau) << '\n';
  write_file(dir / ("trace_seed" + std::to_string(seed) + ".csv"), csv.str());

  SeedOutcome out;
  out.seed = seed;
  out.diverged = res.diverged;
  if (res.diverged) {
    out.metric = res.final_mse;
    out.extra = json{{"diverged_epoch", res.diverged_epoch},
                     {"diverged_batch", res.diverged_batch}};
    return out;
  }
  // Prediction MSE against the clean target on fresh covariates.
  RegressionData test = generate_regression(gen, cfg.n_test, 0.0, test_rng);
  double mse = 0.0;
  for (int i = 0; i < cfg.n_test; ++i) {
    const double pred = res.predict(row_of(test.X, i));
    mse += (pred - test.y_clean[i]) * (pred - test.y_clean[i]);
  }
  out.metric = mse / cfg.n_test;
  out.extra = json{{"final_train_mse", res.final_mse},
                   {"initial_train_mse", res.initial_mse}};
  // Checkpoint with metadata.
  fs::create_directories(dir / "checkpoints");
  const json meta{{"config_hash", config_hash(cfg)},
                  {"epoch", cfg.train.epochs},
                  {"seed", seed}};
  save_net(res.net,
           (dir / "checkpoints" / ("seed" + std::to_string(seed) + ".json")).string(),
           meta.dump());
  return out;
}

SeedOutcome run_ot_seed(const ExperimentConfig& cfg, uint64_t seed,
                        const fs::path& dir) {
  Rng base(seed);
  Rng src_rng = base.split(1);
  Rng tgt_rng = base.split(2);
  Rng init_f = base.split(3);
  Rng init_g = base.split(4);
  Rng val_rng = base.split(5);
  Rng test_rng = base.split(6);

  const GeneratorSpec& gen = cfg.generator;
  const int d = gen.shape2d() ? 2 : gen.d;
  const int m = cfg.m > 0 ? cfg.m : cfg.n;
  PointCloud src{sample_source(gen, cfg.n, src_rng), PointCloud::Role::Source};
  PointCloud tgt{sample_target(gen, m, tgt_rng), PointCloud::Role::Target};
  Matrix val_src = sample_source(gen, cfg.n_valid, val_rng);
  Matrix val_tgt = sample_target(gen, cfg.n_valid, val_rng);

  ConvexNet f0 = init_net(cfg.arch, d, init_f, /*critic=*/false);
  ConvexNet g0 = init_net(cfg.arch, d, init_g,
                          /*critic=*/cfg.ot.lambda_cvx > 0.0);
  OTConfig ot_cfg = cfg.ot;
  ot_cfg.seed = base.split(7).u64();
  SaddleResult res =
      cfg.ot.lambda_cvx > 0.0
          ? icnn_baseline_train(f0, g0, src, tgt, ot_cfg, &val_src, &val_tgt)
          : saddle_train(f0, g0, src, tgt, ot_cfg, &val_src, &val_tgt);

  std::ostringstream csv;
  csv << "outer_iter,objective,tau,lr,val_sinkhorn\n";
  for (const auto& row : res.trace) {
    csv << row.outer_iter << ',' << fmt(row.objective) << ',' << fmt(row.tau)
        << ',' << fmt(row.lr) << ',';
    if (row.has_val) csv << fmt(row.val_sinkhorn);
    csv << '\n';
  }
  write_file(dir / ("trace_seed" + std::to_string(seed) + ".csv"), csv.str());

  SeedOutcome out;
  out.seed = seed;
  out.diverged = res.diverged;
  if (res.diverged) {
    out.metric = 1e300;
    out.extra = json{{"diverged_iter", res.diverged_iter}};
    return out;
  }

  // Held-out metric: map MSE against the ground truth for phi targets,
  // validation Sinkhorn divergence for the distribution-only shapes.
  Matrix test_src = sample_source(gen, cfg.n_test, test_rng);
  Matrix push = pushforward(res.f, test_src);
  if (gen.ot_map()) {
    double mse = 0.0;
    for (int i = 0; i < test_src.rows(); ++i) {
      Vector truth = ot_map_value(gen, row_of(test_src, i));
      for (int c = 0; c < d; ++c)
        mse += (push(i, c) - truth[c]) * (push(i, c) - truth[c]);
    }
    out.metric = mse / test_src.rows();
  } else {
    Matrix test_tgt = sample_target(gen, cfg.n_test, test_rng);
    out.metric = sinkhorn_divergence(push, test_tgt, cfg.ot.val_eps);
  }

  // Pushforward CSV (x..., T(x)...).
  std::ostringstream map_csv;
  for (int c = 0; c < d; ++c) map_csv << "x" << c << ',';
  for (int c = 0; c < d; ++c)
    map_csv << "Tx" << c << (c + 1 < d ? "," : "\n");
  for (int i = 0; i < test_src.rows(); ++i) {
    for (int c = 0; c < d; ++c) map_csv << fmt(test_src(i, c)) << ',';
    for (int c = 0; c < d; ++c)
      map_csv << fmt(push(i, c)) << (c + 1 < d ? "," : "\n");
  }
  write_file(dir / ("map_seed" + std::to_string(seed) + ".csv"), map_csv.str());

  if (!res.checkpoints.empty()) {
    fs::create_directories(dir / "checkpoints");
    for (size_t k = 0; k < res.checkpoints.size(); ++k) {
      const json meta{{"config_hash", config_hash(cfg)},
                      {"outer_iter", res.checkpoint_iters[k]},
                      {"seed", seed}};
      save_net(res.checkpoints[k],
               (dir / "checkpoints" /
                ("seed" + std::to_string(seed) + "_iter" +
                 std::to_string(res.checkpoint_iters[k]) + ".json"))
                   .string(),
               meta.dump());
    }
  }
  return out;
}

SeedOutcome run_diag_seed(const ExperimentConfig& cfg, uint64_t seed,
                          std::vector<double>* s2, std::vector<double>* st,
                          std::vector<double>* norms) {
  Rng base(seed);
  Rng init_rng = base.split(1);
  Rng input_rng = base.split(2);
  const std::vector<int> shape(cfg.diag_depth, cfg.diag_width);
  ConvexNet net = init_hycnn(shape, cfg.generator.d, init_rng);
  Vector x(cfg.generator.d);
  for (auto& v : x) v = input_rng.normal();
  Activations acts = forward_trace(net, x);
  for (int l = 0; l < cfg.diag_depth; ++l) {
    double m2 = 0.0, mc = 0.0, nrm = 0.0;
    const int w = static_cast<int>(acts.s[l].size());
    for (int j = 0; j < w; ++j) {
      m2 += acts.s[l][j] * acts.s[l][j];
      mc += acts.s[l][j] * acts.t[l][j];
      nrm += acts.z[l + 1][j] * acts.z[l + 1][j];
    }
    (*s2)[l] += m2 / w;
    (*st)[l] += mc / w;
    (*norms)[l] += std::sqrt(nrm);
  }
  SeedOutcome out;
  out.seed = seed;
  out.metric = 0.0;
  return out;
}

}  // namespace

std::pair<double, double> mean_se(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (xs.size() - 1);
  return {mean, std::sqrt(var / xs.size())};
}

RunSummary run(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("config needs at least one seed");
  const fs::path dir = resolve_out_dir(cfg.out_dir.empty() ? "run" : cfg.out_dir);
  fs::create_directories(dir);
  write_file(dir / "config.json", config_to_json(cfg));

  if (cfg.task == "regression") {
    auto outcomes = run_seeds(cfg, [&](uint64_t seed) {
      return run_regression_seed(cfg, seed, dir);
    });
    return finalize_summary(cfg, summary_header(cfg, "test_mse"), outcomes, dir);
  }
  if (cfg.task == "ot") {
    auto outcomes =
        run_seeds(cfg, [&](uint64_t seed) { return run_ot_seed(cfg, seed, dir); });
    return finalize_summary(
        cfg,
        summary_header(cfg, cfg.generator.ot_map() ? "map_mse"
                                                   : "test_sinkhorn"),
        outcomes, dir);
  }
  if (cfg.task == "init-diagnostics") {
    std::vector<double> s2(cfg.diag_depth, 0.0), st(cfg.diag_depth, 0.0),
        norms(cfg.diag_depth, 0.0);
    for (uint64_t seed : cfg.seeds) run_diag_seed(cfg, seed, &s2, &st, &norms);
    const double k = static_cast<double>(cfg.seeds.size());
    std::ostringstream csv;
    csv << "layer,mean_hidden_norm,e_s2,e_st\n";
    for (int l = 0; l < cfg.diag_depth; ++l)
      csv << (l + 1) << ',' << fmt(norms[l] / k) << ',' << fmt(s2[l] / k) << ','
          << fmt(st[l] / k) << '\n';
    write_file(dir / "layers.csv", csv.str());
    // Fixed-point windows apply to the hidden pre-activations fed by a
    // previous hidden layer (layers 2..L).
    bool pass = true;
    for (int l = 1; l < cfg.diag_depth; ++l) {
      pass = pass && s2[l] / k >= 0.7 && s2[l] / k <= 1.3;
      pass = pass && st[l] / k >= 0.3 && st[l] / k <= 0.7;
    }
    json j = summary_header(cfg, "fixed_point");
    json layers = json::array();
    for (int l = 0; l < cfg.diag_depth; ++l)
      layers.push_back(json{{"layer", l + 1},
                            {"mean_hidden_norm", norms[l] / k},
                            {"e_s2", s2[l] / k},
                            {"e_st", st[l] / k}});
    j["layers"] = std::move(layers);
    j["pass"] = pass;
    RunSummary rs;
    rs.json = j.dump(2);
    rs.ok = pass;
    write_file(dir / "summary.json", rs.json);
    return rs;
  }
  if (cfg.task == "construct") {
    ConstructionCertificate cert;
    if (cfg.construct_kind == "quadratic")
      cert = build_quadratic_hycnn(cfg.widths).cert;
    else if (cfg.construct_kind == "quadratic2")
      cert = build_quadratic_width2(cfg.cons_L).cert;
    else if (cfg.construct_kind == "monomial")
      cert = build_monomial_hycnn(cfg.mono_n, cfg.cons_L, cfg.cons_m).cert;
    else if (cfg.construct_kind == "multiquad")
      cert = build_multivariate_quadratic(cfg.cons_d, cfg.cons_L, cfg.cons_m).cert;
    else
      throw ConfigError("unknown construct kind: " + cfg.construct_kind);
    write_file(dir / "cert.json", certificate_to_json(cert));
    json j = summary_header(cfg, "certificate");
    j["certificate"] = json::parse(certificate_to_json(cert));
    RunSummary rs;
    rs.json = j.dump(2);
    rs.ok = cert.pass;
    write_file(dir / "summary.json", rs.json);
    return rs;
  }
  if (cfg.task == "pieces") {
    int budget = cfg.piece_widths.empty() ? 0 : cfg.piece_widths[0];
    for (size_t l = 1; l < cfg.piece_widths.size(); ++l)
      budget += 2 * cfg.piece_widths[l];
    std::ostringstream csv;
    csv << "seed,kinks,budget\n";
    bool pass = true;
    std::vector<SeedOutcome> outcomes;
    for (uint64_t seed : cfg.seeds) {
      Rng rng(seed);
      const GateSpec gate = cfg.arch.gate == "leaky_relu"
                                ? GateSpec::leaky_relu(cfg.arch.alpha)
                                : GateSpec::relu();
      ConvexNet net =
          init_icnn_hoedt(cfg.piece_widths, 1, rng, WeightStyle::LogNormal, gate);
      const int kinks =
          pwa_of_network(net, -50.0, 50.0).piece_count() - 1;
      pass = pass && kinks <= budget;
      csv << seed << ',' << kinks << ',' << budget << '\n';
      SeedOutcome o;
      o.seed = seed;
      o.metric = kinks;
      outcomes.push_back(o);
    }
    write_file(dir / "pieces.csv", csv.str());
    json j = summary_header(cfg, "kinks");
    j["budget"] = budget;
    j["pass"] = pass;
    RunSummary rs = finalize_summary(cfg, j, outcomes, dir);
    rs.ok = pass;
    return rs;
  }
  if (cfg.task == "embed") {
    Rng rng(cfg.seeds[0]);
    EmbeddingReport report = embedding_checks(rng);
    json j = summary_header(cfg, "embedding");
    j["icnn_to_hycnn_max_diff"] = report.icnn_to_hycnn_max_diff;
    j["hycnn_to_relu_max_diff"] = report.hycnn_to_relu_max_diff;
    j["hycnn_2222_error"] = report.hycnn_2222_error;
    j["icnn_floor_same_budget"] = report.icnn_floor_same_budget;
    j["pass"] = report.pass;
    RunSummary rs;
    rs.json = j.dump(2);
    rs.ok = report.pass;
    write_file(dir / "summary.json", rs.json);
    return rs;
  }
  throw ConfigError("unknown task: " + cfg.task);
}

std::string summarize(const std::vector<std::string>& run_dirs) {
  struct Row {
    std::string method, generator, task, metric;
    int width, depth, d, seeds, diverged;
    double mean, se;
  };
  std::vector<Row> rows;
  for (const auto& dir : run_dirs) {
    std::ifstream in(fs::path(dir) / "summary.json");
    if (!in) throw ConfigError("no summary.json under " + dir);
    json j;
    in >> j;
    if (!j.contains("config") || !j.contains("mean"))
      throw ConfigError("summary schema mismatch in " + dir);
    const auto& cfg = j["config"];
    Row row;
    row.task = j.value("task", "");
    row.metric = j.value("metric", "");
    const auto& arch = cfg["arch"];
    row.method = arch.value("type", "?") + "/" + arch.value("gate", "?");
    row.width = arch.value("width", 0);
    row.depth = arch.value("depth", 0);
    row.d = cfg["generator"].value("d", 0);
    row.generator = cfg["generator"].value("id", "");
    row.mean = j.value("mean", 0.0);
    row.se = j.value("se", 0.0);
    row.seeds = j.contains("per_seed") ? static_cast<int>(j["per_seed"].size()) : 0;
    row.diverged = j.value("diverged_count", 0);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.generator, a.d, a.method, a.width, a.depth) <
           std::tie(b.generator, b.d, b.method, b.width, b.depth);
  });
  std::ostringstream csv;
  csv << "method,width,depth,d,generator,task,metric,mean,se,seeds,diverged\n";
  for (const auto& r : rows) {
    csv << r.method << ',' << r.width << ',' << r.depth << ',' << r.d << ','
        << r.generator << ',' << r.task << ',' << r.metric << ',' << fmt(r.mean)
        << ',' << fmt(r.se) << ',' << r.seeds << ',' << r.diverged << '\n';
  }
  return csv.str();
}

}  // namespace hycnn::bench
