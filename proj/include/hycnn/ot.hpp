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

#ifndef HYCNN_OT_HPP
#define HYCNN_OT_HPP

#include <functional>
#include <vector>

#include "hycnn/nets.hpp"
#include "hycnn/train.hpp"

namespace hycnn {

struct PointCloud {
  enum class Role { Source, Target, Validation, Test };
  Matrix X;  // n x d, rows are samples
  Role role = Role::Source;
};

// --- Entropic OT -----------------------------------------------------------

struct SinkhornResult {
  double value = 0.0;
  Vector f, g;  // dual potentials on the two clouds
  int iterations = 0;
  bool converged = false;
};

// Discrete entropic OT between uniform empirical measures with cost
// c(x,y) = 0.5 |x-y|^2, solved by log-domain Sinkhorn iterations;
// convergence when the sup-norm of the potential updates drops below tol.
SinkhornResult sinkhorn(const Matrix& a_cloud, const Matrix& b_cloud,
                        double eps, int max_iter = 5000, double tol = 1e-6);

// Debiased divergence S_eps(a,b) = OT_eps(a,b) - (OT_eps(a,a) + OT_eps(b,b))/2.
double sinkhorn_divergence(const Matrix& a_cloud, const Matrix& b_cloud,
                           double eps, int max_iter = 5000, double tol = 1e-6);

// Out-of-sample barycentric map: softmax-weighted average of target points
// with weights exp((g*_j - c(x, Y_j)) / eps).
Vector barycentric_map(const Vector& x, const Matrix& tgt_cloud,
                       const Vector& g_star, double eps);

// Rows mapped through grad f.
Matrix pushforward(const ConvexNet& f, const Matrix& X);

// --- Saddle-point map estimation ---------------------------------------------

struct OTConfig {
  int outer_T = 1000;
  int inner_S = 5;
  int batch_M = 256;
  Schedule lr = Schedule::cosine(1e-2, 0.01, 1000);
  Schedule tau = Schedule::constant(10.0);  // gate temperature per outer step
  double beta1 = 0.5;
  double beta2 = 0.9;
  double adam_eps = 1e-8;
  double lambda_cvx = 0.0;  // soft convexity penalty on the critic
  uint64_t seed = 0;
  int checkpoint_every = 0;  // snapshot the potential every k outer steps
  int val_every = 0;         // record validation divergence every k steps
  double val_eps = 0.1;
};

struct OTTraceRow {
  int outer_iter;
  double objective;  // minibatch semidual value being min-maxed
  double tau;
  double lr;
  double val_sinkhorn = 0.0;
  bool has_val = false;
};

struct SaddleResult {
  ConvexNet f, g;
  std::vector<OTTraceRow> trace;
  std::vector<ConvexNet> checkpoints;  // potential snapshots
  std::vector<int> checkpoint_iters;
  bool diverged = false;
  int diverged_iter = -1;
};

// Alternating minibatch saddle optimization: per outer step a fresh source
// batch is frozen, the critic takes S Adam steps fitting the conjugate on
// resampled target batches (plus the optional soft convexity penalty), then
// the potential takes one Adam step on the semidual. The map estimate is
// grad f. Both gates must be smooth, and both follow cfg.tau.
SaddleResult saddle_train(const ConvexNet& f0, const ConvexNet& g0,
                          const PointCloud& src, const PointCloud& tgt,
                          const OTConfig& cfg,
                          const Matrix* val_src = nullptr,
                          const Matrix* val_tgt = nullptr);

// Same loop with the critic soft-penalized instead of reparametrized;
// cfg.lambda_cvx should be positive and g0 unconstrained (Gaussian style).
SaddleResult icnn_baseline_train(const ConvexNet& f0, const ConvexNet& g0,
                                 const PointCloud& src, const PointCloud& tgt,
                                 const OTConfig& cfg,
                                 const Matrix* val_src = nullptr,
                                 const Matrix* val_tgt = nullptr);

// Soft convexity penalty lambda * |(V_eff)_-|_F^2 summed over the critic's
// hidden-to-hidden weights.
double convexity_penalty(const ConvexNet& g, double lambda);

// Frozen analytic potential hook: runs only the critic updates of the same
// inner objective against a fixed f given by (value, grad) callables.
struct AnalyticPotential {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
};
ConvexNet train_critic_against(const AnalyticPotential& f, const ConvexNet& g0,
                               const PointCloud& tgt, const OTConfig& cfg);

// --- Checkpoint selection -------------------------------------------------------

struct CheckpointSelection {
  std::vector<int> selected;   // indices of the K best by validation metric
  std::vector<double> val_scores;  // per checkpoint
  double mean_metric = 0.0;    // mean divergence of the selected checkpoints
};

// Ranks checkpoints by sinkhorn_divergence(pushforward(val_src), val_tgt)
// and averages the metric of the K best; the metric is evaluated on the
// test clouds when given, else on the validation clouds.
CheckpointSelection checkpoint_select(const std::vector<ConvexNet>& checkpoints,
                                      const Matrix& val_src,
                                      const Matrix& val_tgt, int K, double eps,
                                      const Matrix* test_src = nullptr,
                                      const Matrix* test_tgt = nullptr);

}  // namespace hycnn

#endif  // HYCNN_OT_HPP
