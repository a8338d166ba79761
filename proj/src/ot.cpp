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

#include "hycnn/ot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hycnn {

namespace {

double sq_dist_rows(const Matrix& a, int i, const Matrix& b, int j) {
  double acc = 0.0;
  const double* ra = a.row(i);
  const double* rb = b.row(j);
  for (int c = 0; c < a.cols(); ++c) {
    const double diff = ra[c] - rb[c];
    acc += diff * diff;
  }
  return acc;
}

Matrix half_sq_cost(const Matrix& a, const Matrix& b) {
  Matrix cost(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j)
      cost(i, j) = 0.5 * sq_dist_rows(a, i, b, j);
  return cost;
}

double logsumexp_row(const double* vals, int n) {
  double hi = vals[0];
  for (int k = 1; k < n; ++k) hi = std::max(hi, vals[k]);
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += std::exp(vals[k] - hi);
  return hi + std::log(acc);
}

}  // namespace

SinkhornResult sinkhorn(const Matrix& a_cloud, const Matrix& b_cloud,
                        double eps, int max_iter, double tol) {
  if (!(eps > 0.0)) throw ContractViolation("sinkhorn: eps must be > 0");
  if (a_cloud.rows() < 1 || b_cloud.rows() < 1)
    throw ContractViolation("sinkhorn: empty cloud");
  if (a_cloud.cols() != b_cloud.cols())
    throw ContractViolation("sinkhorn: dimension mismatch");
  const int n = a_cloud.rows();
  const int m = b_cloud.rows();
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  const Matrix cost = half_sq_cost(a_cloud, b_cloud);

  SinkhornResult res;
  res.f.assign(n, 0.0);
  res.g.assign(m, 0.0);
  Vector buf(std::max(n, m));
  for (int it = 0; it < max_iter; ++it) {
    double delta = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j)
        buf[j] = (res.g[j] - cost(i, j)) / eps + log_b;
      const double fn = -eps * logsumexp_row(buf.data(), m);
      delta = std::max(delta, std::fabs(fn - res.f[i]));
      res.f[i] = fn;
    }
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i)
        buf[i] = (res.f[i] - cost(i, j)) / eps + log_a;
      const double gn = -eps * logsumexp_row(buf.data(), n);
      delta = std::max(delta, std::fabs(gn - res.g[j]));
      res.g[j] = gn;
    }
    res.iterations = it + 1;
    if (delta < tol) {
      res.converged = true;
      break;
    }
  }
  double value = 0.0;
  for (double v : res.f) value += v / n;
  for (double v : res.g) value += v / m;
  res.value = value;
  return res;
}

double sinkhorn_divergence(const Matrix& a_cloud, const Matrix& b_cloud,
                           double eps, int max_iter, double tol) {
  const double ab = sinkhorn(a_cloud, b_cloud, eps, max_iter, tol).value;
  const double aa = sinkhorn(a_cloud, a_cloud, eps, max_iter, tol).value;
  const double bb = sinkhorn(b_cloud, b_cloud, eps, max_iter, tol).value;
  return ab - 0.5 * aa - 0.5 * bb;
}

Vector barycentric_map(const Vector& x, const Matrix& tgt_cloud,
                       const Vector& g_star, double eps) {
  if (!(eps > 0.0)) throw ContractViolation("barycentric_map: eps must be > 0");
  const int m = tgt_cloud.rows();
  if (static_cast<int>(g_star.size()) != m)
    throw ContractViolation("barycentric_map: potential length mismatch");
  if (static_cast<int>(x.size()) != tgt_cloud.cols())
    throw ContractViolation("barycentric_map: dimension mismatch");
  Vector logits(m);
  for (int j = 0; j < m; ++j) {
    double sq = 0.0;
    const double* rj = tgt_cloud.row(j);
    for (size_t c = 0; c < x.size(); ++c) {
      const double diff = x[c] - rj[c];
      sq += diff * diff;
    }
    logits[j] = (g_star[j] - 0.5 * sq) / eps;
  }
  const double lse = logsumexp_row(logits.data(), m);
  Vector out(x.size(), 0.0);
  for (int j = 0; j < m; ++j) {
    const double w = std::exp(logits[j] - lse);
    const double* rj = tgt_cloud.row(j);
    for (size_t c = 0; c < x.size(); ++c) out[c] += w * rj[c];
  }
  return out;
}

Matrix pushforward(const ConvexNet& f, const Matrix& X) {
  Matrix out(X.rows(), X.cols());
  Vector x(X.cols());
  for (int i = 0; i < X.rows(); ++i) {
    std::copy(X.row(i), X.row(i) + X.cols(), x.begin());
    Vector t = input_gradient(f, x);
    std::copy(t.begin(), t.end(), out.row(i));
  }
  return out;
}

// --- Saddle training ------------------------------------------------------------

namespace {

constexpr double kDivergenceCap = 1e12;

void set_tau(ConvexNet& net, double tau) {
  if (net.gate.tau != tau) {
    net.gate.tau = tau;
    net.bump_version();
    net.ensure_cache();
  }
}

// d/draw of lambda * |(V_eff)_-|_F^2 over the critic's hidden-to-hidden
// blocks, added into grad (flat layout from train.cpp). With softplus
// reparametrization the effective weight is positive and the term vanishes.
void add_convexity_penalty_grad(const ConvexNet& g, double lambda,
                                Vector& grad) {
  if (lambda <= 0.0) return;
  size_t off = 0;
  for (int i = 0; i < g.depth(); ++i) {
    const auto& l = g.layers[i];
    auto handle = [&](const Matrix& raw) {
      if (!l.reparam) {
        for (size_t k = 0; k < raw.data().size(); ++k) {
          const double v = raw.data()[k];
          if (v < 0.0) grad[off + k] += 2.0 * lambda * v;
        }
      }
      off += raw.data().size();
    };
    handle(l.V1_raw);
    handle(l.V2_raw);
    off += l.W1.data().size() + l.W2.data().size() + l.b1.size() + l.b2.size();
  }
}

}  // namespace

double convexity_penalty(const ConvexNet& g, double lambda) {
  if (lambda <= 0.0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < g.depth(); ++i) {
    const Matrix v1 = g.effective_V1(i);
    const Matrix v2 = g.effective_V2(i);
    for (double v : v1.data())
      if (v < 0.0) acc += v * v;
    for (double v : v2.data())
      if (v < 0.0) acc += v * v;
  }
  return lambda * acc;
}

SaddleResult saddle_train(const ConvexNet& f0, const ConvexNet& g0,
                          const PointCloud& src, const PointCloud& tgt,
                          const OTConfig& cfg, const Matrix* val_src,
                          const Matrix* val_tgt) {
  if (!f0.gate.smooth() || !g0.gate.smooth())
    throw ContractViolation("saddle_train: gates must be smooth");
  if (src.X.cols() != tgt.X.cols() || src.X.cols() != f0.input_dim ||
      g0.input_dim != f0.input_dim)
    throw ContractViolation("saddle_train: dimension mismatch");
  const int n = src.X.rows();
  const int m = tgt.X.rows();
  const int M = std::min({cfg.batch_M, n, m});
  if (cfg.outer_T > 0 && cfg.inner_S < 1)
    throw ContractViolation("saddle_train: inner_S must be >= 1");

  SaddleResult res;
  res.f = f0;
  res.g = g0;
  res.f.ensure_cache();
  res.g.ensure_cache();
  NetOptimizer opt_f(res.f, cfg.beta1, cfg.beta2, cfg.adam_eps);
  NetOptimizer opt_g(res.g, cfg.beta1, cfg.beta2, cfg.adam_eps);
  Rng rng(cfg.seed);

  const int d = f0.input_dim;
  Vector xi(d), yi(d);
  std::vector<int> xbatch(M), ybatch(M);
  Vector grad_g(param_count(res.g));
  Vector grad_f(param_count(res.f));
  GradWorkspace ws;

  for (int t = 0; t < cfg.outer_T; ++t) {
    const double lr = schedule_value(cfg.lr, t);
    const double tau = schedule_value(cfg.tau, t);
    set_tau(res.f, tau);
    set_tau(res.g, tau);
    for (int i = 0; i < M; ++i)
      xbatch[i] = static_cast<int>(rng.u64() % static_cast<uint64_t>(n));

    for (int s = 0; s < cfg.inner_S; ++s) {
      for (int i = 0; i < M; ++i)
        ybatch[i] = static_cast<int>(rng.u64() % static_cast<uint64_t>(m));
      std::fill(grad_g.begin(), grad_g.end(), 0.0);
      for (int i = 0; i < M; ++i) {
        std::copy(tgt.X.row(ybatch[i]), tgt.X.row(ybatch[i]) + d, yi.begin());
        Vector ty = input_gradient(res.g, yi);
        Vector tf = input_gradient(res.f, ty);
        // v = Y - grad f(grad g(Y)); ascend <v, grad g(Y)> per sample.
        Vector v(d);
        for (int c = 0; c < d; ++c) v[c] = yi[c] - tf[c];
        grad_of_input_grad_acc(res.g, yi, v, -1.0 / M, grad_g);
      }
      // grad_g now holds the descent direction of the conjugate fit; add
      // the descent direction of the convexity penalty.
      add_convexity_penalty_grad(res.g, cfg.lambda_cvx, grad_g);
      opt_g.step(res.g, grad_g, lr);
    }

    // One semidual descent step on the potential, reusing the most recent
    // target batch.
    std::fill(grad_f.begin(), grad_f.end(), 0.0);
    double objective = 0.0;
    for (int i = 0; i < M; ++i) {
      std::copy(src.X.row(xbatch[i]), src.X.row(xbatch[i]) + d, xi.begin());
      std::copy(tgt.X.row(ybatch[i]), tgt.X.row(ybatch[i]) + d, yi.begin());
      objective += forward_record(res.f, xi, ws);
      param_gradients_ws(res.f, xi, ws, 1.0 / M, grad_f);
      Vector ty = input_gradient(res.g, yi);
      objective += dot(yi, ty);
      objective -= forward_record(res.f, ty, ws);
      param_gradients_ws(res.f, ty, ws, -1.0 / M, grad_f);
    }
    objective /= M;
    if (!std::isfinite(objective) || std::fabs(objective) > kDivergenceCap) {
      res.diverged = true;
      res.diverged_iter = t;
      res.trace.push_back({t, objective, tau, lr, 0.0, false});
      return res;
    }
    opt_f.step(res.f, grad_f, lr);

    OTTraceRow row{t, objective, tau, lr, 0.0, false};
    if (cfg.val_every > 0 && val_src && val_tgt &&
        (t + 1) % cfg.val_every == 0) {
      row.val_sinkhorn = sinkhorn_divergence(pushforward(res.f, *val_src),
                                             *val_tgt, cfg.val_eps);
      row.has_val = true;
    }
    res.trace.push_back(row);
    if (cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0) {
      res.checkpoints.push_back(res.f);
      res.checkpoint_iters.push_back(t);
    }
  }
  return res;
}

SaddleResult icnn_baseline_train(const ConvexNet& f0, const ConvexNet& g0,
                                 const PointCloud& src, const PointCloud& tgt,
                                 const OTConfig& cfg, const Matrix* val_src,
                                 const Matrix* val_tgt) {
  return saddle_train(f0, g0, src, tgt, cfg, val_src, val_tgt);
}

ConvexNet train_critic_against(const AnalyticPotential& f, const ConvexNet& g0,
                               const PointCloud& tgt, const OTConfig& cfg) {
  if (!g0.gate.smooth())
    throw ContractViolation("train_critic_against: gate must be smooth");
  const int m = tgt.X.rows();
  const int d = g0.input_dim;
  const int M = std::min(cfg.batch_M, m);
  ConvexNet g = g0;
  g.ensure_cache();
  NetOptimizer opt_g(g, cfg.beta1, cfg.beta2, cfg.adam_eps);
  Rng rng(cfg.seed);
  Vector yi(d);
  Vector grad_g(param_count(g));
  for (int t = 0; t < cfg.outer_T; ++t) {
    const double lr = schedule_value(cfg.lr, t);
    const double tau = schedule_value(cfg.tau, t);
    set_tau(g, tau);
    for (int s = 0; s < cfg.inner_S; ++s) {
      std::fill(grad_g.begin(), grad_g.end(), 0.0);
      for (int i = 0; i < M; ++i) {
        const int j = static_cast<int>(rng.u64() % static_cast<uint64_t>(m));
        std::copy(tgt.X.row(j), tgt.X.row(j) + d, yi.begin());
        Vector ty = input_gradient(g, yi);
        Vector tf = f.grad(ty);
        Vector v(d);
        for (int c = 0; c < d; ++c) v[c] = yi[c] - tf[c];
        grad_of_input_grad_acc(g, yi, v, -1.0 / M, grad_g);
      }
      add_convexity_penalty_grad(g, cfg.lambda_cvx, grad_g);
      opt_g.step(g, grad_g, lr);
    }
  }
  return g;
}

CheckpointSelection checkpoint_select(const std::vector<ConvexNet>& checkpoints,
                                      const Matrix& val_src,
                                      const Matrix& val_tgt, int K, double eps,
                                      const Matrix* test_src,
                                      const Matrix* test_tgt) {
  if (K < 1 || K > static_cast<int>(checkpoints.size()))
    throw ContractViolation("checkpoint_select: K exceeds checkpoint count");
  CheckpointSelection sel;
  sel.val_scores.reserve(checkpoints.size());
  // OT_eps(Q_val, Q_val) is shared by every divergence evaluation.
  const double val_tt = sinkhorn(val_tgt, val_tgt, eps).value;
  for (const auto& net : checkpoints) {
    const Matrix push = pushforward(net, val_src);
    const double ab = sinkhorn(push, val_tgt, eps).value;
    const double aa = sinkhorn(push, push, eps).value;
    sel.val_scores.push_back(ab - 0.5 * aa - 0.5 * val_tt);
  }
  std::vector<int> order(checkpoints.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sel.val_scores[a] < sel.val_scores[b];
  });
  order.resize(K);
  sel.selected = order;
  double acc = 0.0;
  if (test_src && test_tgt) {
    const double test_tt = sinkhorn(*test_tgt, *test_tgt, eps).value;
    for (int idx : sel.selected) {
      const Matrix push = pushforward(checkpoints[idx], *test_src);
      const double ab = sinkhorn(push, *test_tgt, eps).value;
      const double aa = sinkhorn(push, push, eps).value;
      acc += ab - 0.5 * aa - 0.5 * test_tt;
    }
  } else {
    for (int idx : sel.selected) acc += sel.val_scores[idx];
  }
  sel.mean_metric = acc / K;
  return sel;
}

}  // namespace hycnn
