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

#ifndef HYCNN_BENCH_HPP
#define HYCNN_BENCH_HPP

#include <optional>
#include <string>
#include <vector>

#include "hycnn/nets.hpp"
#include "hycnn/ot.hpp"
#include "hycnn/theory.hpp"
#include "hycnn/train.hpp"

namespace hycnn::bench {

// --- Data generators ---------------------------------------------------------
//
// Regression targets on Unif[-1,1]^d:
//   f1 |x|_2^2, f2 |x|_4^4, f3 |x|_2^2 + 0.25 sin(20 |x|_2), f4 |x|_1,
//   f5 exp(|x|_1 / sqrt(d)), f6 max(|x-mu|^2, |x+mu|^2) with mu ~ N(0,1/d)^d
//   drawn once per dataset from its own seed.
// OT pairs: source P, target (grad phi)_# P with
//   phi1: T(x) = x (P = N(0,I)),
//   phi2: T(x)_i = (1 + sin(i)/2) x_i (P = N(0,I), i one-based),
//   phi3: T(x)_i = x_i + sign(x_i) (P = N(0,I)),
//   phi4: T(x)_i = 4 x_i^3 (P = Unif[-1,1]^d).
// 2-D shapes (documented parameterizations, distributional targets only):
//   checkerboard: five unit squares (source) vs the four complementary
//     squares (target) on a step-2 grid;
//   halfmoon: standard normal (source) vs a noisy upper half-circle of
//     radius 2 centered at (0,-0.5) (target);
//   gauss-ring: standard normal (source) vs a mixture of eight Gaussians of
//     scale 0.25 on a radius-4 ring (target).

struct GeneratorSpec {
  std::string id;  // f1..f6, phi1..phi4, checkerboard, halfmoon, gauss-ring
  int d = 1;
  uint64_t mu_seed = 1;  // f6 only

  bool regression() const { return !id.empty() && id[0] == 'f'; }
  bool ot_map() const { return id.rfind("phi", 0) == 0; }
  bool shape2d() const { return !regression() && !ot_map(); }
};

struct RegressionData {
  Matrix X;
  Vector y;        // noisy responses
  Vector y_clean;  // f(X)
};

// Clean target value (regression generators only; f6 draws mu internally
// from spec.mu_seed).
double clean_value(const GeneratorSpec& spec, const Vector& x);
// Ground-truth OT map (phi generators only).
Vector ot_map_value(const GeneratorSpec& spec, const Vector& x);

RegressionData generate_regression(const GeneratorSpec& spec, int n,
                                   double sigma, Rng& rng);
Matrix sample_source(const GeneratorSpec& spec, int n, Rng& rng);
// For phi generators the target is the pushforward of fresh source draws;
// for shapes it is the target shape itself.
Matrix sample_target(const GeneratorSpec& spec, int n, Rng& rng);

// --- Experiment configuration -------------------------------------------------

struct ArchSpec {
  std::string type = "hycnn";  // hycnn | icnn | icnnq | groupmax | mlp
  int width = 48;
  int depth = 4;
  std::string gate = "max";  // max | logsumexp | relu | leaky_relu | softplus
  double tau = 1.0;
  double alpha = 0.2;
};

GateSpec gate_of(const ArchSpec& arch);
ConvexNet init_net(const ArchSpec& arch, int input_dim, Rng& rng,
                   bool critic = false);

struct ExperimentConfig {
  std::string task;  // regression | ot | init-diagnostics | construct |
                     // pieces | embed
  GeneratorSpec generator;
  int n = 5000;
  int m = 0;  // target sample count for OT; defaults to n
  double sigma = 0.0;
  ArchSpec arch;
  // regression
  TrainConfig train;
  int n_test = 1000;
  // ot
  OTConfig ot;
  int n_valid = 1000;
  // init-diagnostics
  int diag_depth = 16;
  int diag_width = 48;
  // construct
  std::string construct_kind = "quadratic";  // quadratic|quadratic2|monomial|multiquad
  std::vector<int> widths = {2, 2};
  int mono_n = 2, cons_L = 1, cons_m = 3, cons_d = 1;
  // pieces
  std::vector<int> piece_widths = {3, 2};

  std::vector<uint64_t> seeds = {1};
  std::string out_dir;
  int threads = 0;  // 0: hardware choice
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
// 64-bit FNV-1a over the canonical JSON, hex-encoded; stamped into
// checkpoints and summaries.
std::string config_hash(const ExperimentConfig& cfg);

// Resolves cfg.out_dir against the HYCNN_OUT_ROOT environment variable when
// the path is relative.
std::string resolve_out_dir(const std::string& out_dir);

struct RunSummary {
  std::string json;  // the summary document written to summary.json
  bool ok = false;   // every criterion-free sub-run completed undiverged
};

// Executes the config (one sub-run per seed, parallel across seeds), writes
// per-seed trace CSVs plus summary.json under the run directory, and returns
// the summary. Divergence is recorded per seed, not thrown.
RunSummary run(const ExperimentConfig& cfg);

// Merges the summary.json files of several run directories into one CSV
// keyed by (method, width, depth, d, generator) with mean and SE columns.
std::string summarize(const std::vector<std::string>& run_dirs);

// Mean and standard error (sample std over sqrt(count)).
std::pair<double, double> mean_se(const std::vector<double>& xs);

}  // namespace hycnn::bench

#endif  // HYCNN_BENCH_HPP
