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

#ifndef HYCNN_TRAIN_HPP
#define HYCNN_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "hycnn/nets.hpp"
#include "hycnn/tensor.hpp"

namespace hycnn {

// --- Flat parameter view -------------------------------------------------
//
// Raw parameters in a fixed traversal order: per layer V1, V2, W1, W2, b1,
// b2 (row-major), then the output layer V, W, b, then Wq for ICNNq.

size_t param_count(const ConvexNet& net);
Vector flatten_params(const ConvexNet& net);
void unflatten_params(ConvexNet& net, const Vector& flat);
// 1 for parameters the optimizer may move. Frozen: first-layer V (multiplies
// z0 = 0), lane-2 blocks under single-lane gates, and input skips past the
// first layer for GroupMax and MLP.
std::vector<uint8_t> trainable_mask(const ConvexNet& net);

// --- Tape and parameter gradients ---------------------------------------

struct GradTape {
  Vector x;
  Activations acts;
  uint64_t net_version = 0;
};

GradTape record_tape(const ConvexNet& net, const Vector& x);
// Recomputes the output from the recorded pre-activations.
double replay_tape(const ConvexNet& net, const GradTape& tape);

// Reusable buffers for batched gradient accumulation; avoids per-sample
// allocations in training loops. One workspace per thread.
struct GradWorkspace {
  std::vector<Vector> z, s, t;
  Vector a1, a2, dz, dz_next;
};

// Forward pass recording into the workspace; returns the output.
double forward_record(const ConvexNet& net, const Vector& x,
                      GradWorkspace& ws);
// Backward pass over the recorded workspace state, accumulating raw
// parameter gradients of (upstream * output).
void param_gradients_ws(const ConvexNet& net, const Vector& x,
                        GradWorkspace& ws, double upstream, Vector& grad);

// Gradients of (upstream * output) with respect to every raw parameter,
// softplus chain factor included where reparam is set. Accumulates into
// `grad`, which must have param_count entries.
void param_gradients_acc(const ConvexNet& net, const GradTape& tape,
                         double upstream, Vector& grad);
Vector param_gradients(const ConvexNet& net, const GradTape& tape,
                       double upstream);

// Gradients of <v, grad_x f(x)> with respect to every raw parameter,
// computed by reverse mode over a tangent-forward pass. Requires a smooth
// gate (LogSumExp or Softplus).
void grad_of_input_grad_acc(const ConvexNet& net, const Vector& x,
                            const Vector& v, double scale, Vector& grad);
Vector grad_of_input_grad(const ConvexNet& net, const Vector& x,
                          const Vector& v);

// --- Adam ----------------------------------------------------------------

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Vector m, v;
};

// Standard bias-corrected update; lazily sizes the accumulators. Masked
// entries are left untouched.
void adam_step(Vector& params, const Vector& grads, AdamState& state,
               double lr);
void adam_step(Vector& params, const Vector& grads,
               const std::vector<uint8_t>& mask, AdamState& state, double lr);

// Convenience wrapper owning the mask and flat state for one net.
struct NetOptimizer {
  AdamState state;
  std::vector<uint8_t> mask;

  NetOptimizer() = default;
  NetOptimizer(const ConvexNet& net, double beta1, double beta2,
               double eps = 1e-8);
  void step(ConvexNet& net, const Vector& grad, double lr);
};

// --- Schedules -------------------------------------------------------------

struct Schedule {
  enum class Kind { Constant, Cosine, CyclicCosine };
  Kind kind = Kind::Constant;
  double v0 = 1.0;
  // Cosine
  double final_ratio = 0.01;
  long horizon = 1;
  // CyclicCosine
  long cycle_len = 100;
  double decay_per_cycle = 0.8;
  double floor_ratio = 0.1;
  double floor_at_fraction = 0.7;

  static Schedule constant(double v);
  static Schedule cosine(double v0, double final_ratio, long T);
  static Schedule cyclic_cosine(double v0, long cycle_len,
                                double decay_per_cycle, double floor_ratio,
                                double floor_at_fraction);
};

// Value at step t; t is clamped to the schedule horizon.
double schedule_value(const Schedule& s, long t);

// --- Regression ------------------------------------------------------------

struct TrainConfig {
  int epochs = 100;
  int batch_size = 1000;  // clamped to n at use
  Schedule lr = Schedule::constant(1e-2);
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  bool standardize = true;
};

struct EpochStat {
  int epoch;
  double train_mse;
  double lr;
  double tau;
};

struct RegressionResult {
  ConvexNet net;  // operates on standardized inputs and targets
  Vector x_mean, x_std;
  double y_mean = 0.0, y_std = 1.0;
  std::vector<EpochStat> trace;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  bool diverged = false;
  int diverged_epoch = -1;
  int diverged_batch = -1;

  // Destandardized predictor.
  double predict(const Vector& x) const;
};

// Mean-squared-error minibatch Adam on (X, y); one epoch is one shuffled
// pass with the last short batch kept. When cfg.standardize is set, inputs
// and targets are standardized per coordinate for training and the reported
// losses and predictor are destandardized back to original units.
// Divergence (non-finite or loss above 1e12) aborts with the failing
// epoch/batch recorded.
RegressionResult train_regression(const ConvexNet& net, const Matrix& X,
                                  const Vector& y, const TrainConfig& cfg,
                                  Rng& rng);

double mse_on(const ConvexNet& net, const Matrix& X, const Vector& y);

}  // namespace hycnn

#endif  // HYCNN_TRAIN_HPP
