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

#include "hycnn/nets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hycnn {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

GateSpec GateSpec::logsumexp(double tau) {
  if (!(tau > 0.0)) throw ContractViolation("LogSumExpGate: tau must be > 0");
  return {GateKind::LogSumExp, tau, 0.2};
}

GateSpec GateSpec::leaky_relu(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ContractViolation("LeakyReLU: alpha must be in (0,1)");
  return {GateKind::LeakyReLU, 1.0, alpha};
}

GateSpec GateSpec::softplus_gate(double tau) {
  if (!(tau > 0.0)) throw ContractViolation("SoftplusGate: tau must be > 0");
  return {GateKind::Softplus, tau, 0.2};
}

double gate_value(const GateSpec& g, double s, double t) {
  switch (g.kind) {
    case GateKind::Max: return s >= t ? s : t;
    case GateKind::LogSumExp: return logsumexp2(s, t, g.tau);
    case GateKind::ReLU: return s > 0.0 ? s : 0.0;
    case GateKind::LeakyReLU: return s >= 0.0 ? s : g.alpha * s;
    case GateKind::Softplus: return g.tau * softplus(s / g.tau);
  }
  return 0.0;
}

void gate_grad(const GateSpec& g, double s, double t, double& g1, double& g2) {
  switch (g.kind) {
    case GateKind::Max:
      g1 = s >= t ? 1.0 : 0.0;
      g2 = 1.0 - g1;
      return;
    case GateKind::LogSumExp:
      g1 = sigmoid((s - t) / g.tau);
      g2 = 1.0 - g1;
      return;
    case GateKind::ReLU:
      g1 = s >= 0.0 ? 1.0 : 0.0;
      g2 = 0.0;
      return;
    case GateKind::LeakyReLU:
      g1 = s >= 0.0 ? 1.0 : g.alpha;
      g2 = 0.0;
      return;
    case GateKind::Softplus:
      g1 = sigmoid(s / g.tau);
      g2 = 0.0;
      return;
  }
}

void gate_grad2(const GateSpec& g, double s, double t, double& d11,
                double& d12, double& d22) {
  switch (g.kind) {
    case GateKind::LogSumExp: {
      const double p = sigmoid((s - t) / g.tau);
      const double c = p * (1.0 - p) / g.tau;
      d11 = c;
      d12 = -c;
      d22 = c;
      return;
    }
    case GateKind::Softplus: {
      const double p = sigmoid(s / g.tau);
      d11 = p * (1.0 - p) / g.tau;
      d12 = 0.0;
      d22 = 0.0;
      return;
    }
    default:
      throw ContractViolation("gate_grad2: gate is not twice differentiable");
  }
}

Matrix effective_of(const Matrix& raw, bool reparam) {
  if (!reparam) return raw;
  Matrix eff(raw.rows(), raw.cols());
  for (size_t i = 0; i < raw.data().size(); ++i)
    eff.data()[i] = softplus(raw.data()[i]);
  return eff;
}

std::vector<int> ConvexNet::widths() const {
  std::vector<int> w;
  w.reserve(layers.size());
  for (const auto& l : layers) w.push_back(static_cast<int>(l.b1.size()));
  return w;
}

Matrix ConvexNet::effective_V1(int layer) const {
  return effective_of(layers[layer].V1_raw, layers[layer].reparam);
}
Matrix ConvexNet::effective_V2(int layer) const {
  return effective_of(layers[layer].V2_raw, layers[layer].reparam);
}
Matrix ConvexNet::effective_Vout() const {
  return effective_of(out.V_raw, out.reparam);
}

void ConvexNet::ensure_cache() {
  if (cache_valid()) return;
  V1_cache_.resize(layers.size());
  V2_cache_.resize(layers.size());
  V1_chain_cache_.resize(layers.size());
  V2_chain_cache_.resize(layers.size());
  auto chain_of = [](const Matrix& raw, bool reparam) {
    Matrix chain(raw.rows(), raw.cols(), 1.0);
    if (reparam)
      for (size_t k = 0; k < raw.data().size(); ++k)
        chain.data()[k] = sigmoid(raw.data()[k]);
    return chain;
  };
  for (int i = 0; i < depth(); ++i) {
    V1_cache_[i] = effective_V1(i);
    V1_chain_cache_[i] = chain_of(layers[i].V1_raw, layers[i].reparam);
    if (gate.two_lane()) {
      V2_cache_[i] = effective_V2(i);
      V2_chain_cache_[i] = chain_of(layers[i].V2_raw, layers[i].reparam);
    } else {
      V2_cache_[i] = Matrix();
      V2_chain_cache_[i] = Matrix();
    }
  }
  Vout_cache_ = effective_Vout();
  cache_version_ = version;
}

namespace {

// Either borrows the net's cache or materializes effective weights locally,
// so evaluation stays pure on shared nets.
struct EffWeights {
  std::vector<Matrix> own1, own2;
  Matrix own_out;
  std::vector<const Matrix*> V1, V2;
  const Matrix* Vout = nullptr;

  explicit EffWeights(const ConvexNet& net) {
    const int L = net.depth();
    V1.resize(L);
    V2.resize(L, nullptr);
    if (net.cache_valid()) {
      for (int i = 0; i < L; ++i) {
        V1[i] = &net.cached_V1(i);
        if (net.gate.two_lane()) V2[i] = &net.cached_V2(i);
      }
      Vout = &net.cached_Vout();
    } else {
      own1.resize(L);
      own2.resize(L);
      for (int i = 0; i < L; ++i) {
        own1[i] = net.effective_V1(i);
        V1[i] = &own1[i];
        if (net.gate.two_lane()) {
          own2[i] = net.effective_V2(i);
          V2[i] = &own2[i];
        }
      }
      own_out = net.effective_Vout();
      Vout = &own_out;
    }
  }
};

void check_input(const ConvexNet& net, const Vector& x) {
  if (static_cast<int>(x.size()) != net.input_dim)
    throw ContractViolation("forward: input length does not match input_dim");
}

// Lane pre-activations for layer i given previous state z.
void lane_preacts(const ConvexNet& net, const EffWeights& eff, int i,
                  const Vector& z, const Vector& x, Vector& s, Vector& t) {
  const HyLayer& layer = net.layers[i];
  s = layer.b1;
  matvec_acc(*eff.V1[i], z, s);
  matvec_acc(layer.W1, x, s);
  if (net.arch == Arch::ICNNq && i == 0) {
    const Vector q = matvec(net.Wq, x);
    for (size_t j = 0; j < s.size(); ++j) s[j] += q[j] * q[j];
  }
  if (net.gate.two_lane()) {
    t = layer.b2;
    matvec_acc(*eff.V2[i], z, t);
    matvec_acc(layer.W2, x, t);
  }
}

}  // namespace

double forward(const ConvexNet& net, const Vector& x) {
  check_input(net, x);
  EffWeights eff(net);
  Vector z(net.input_dim, 0.0);
  Vector s, t, znext;
  for (int i = 0; i < net.depth(); ++i) {
    lane_preacts(net, eff, i, z, x, s, t);
    znext.resize(s.size());
    if (net.gate.two_lane()) {
      for (size_t j = 0; j < s.size(); ++j)
        znext[j] = gate_value(net.gate, s[j], t[j]);
    } else {
      for (size_t j = 0; j < s.size(); ++j)
        znext[j] = gate_value(net.gate, s[j], 0.0);
    }
    z.swap(znext);
  }
  double y = net.out.b[0];
  const Matrix& vout = *eff.Vout;
  for (int c = 0; c < vout.cols(); ++c) y += vout(0, c) * z[c];
  for (int c = 0; c < net.out.W.cols(); ++c) y += net.out.W(0, c) * x[c];
  return y;
}

Activations forward_trace(const ConvexNet& net, const Vector& x) {
  check_input(net, x);
  EffWeights eff(net);
  Activations act;
  const int L = net.depth();
  act.z.resize(L + 1);
  act.s.resize(L);
  act.t.resize(L);
  act.z[0] = Vector(net.input_dim, 0.0);
  for (int i = 0; i < L; ++i) {
    lane_preacts(net, eff, i, act.z[i], x, act.s[i], act.t[i]);
    Vector& zn = act.z[i + 1];
    zn.resize(act.s[i].size());
    if (net.gate.two_lane()) {
      for (size_t j = 0; j < zn.size(); ++j)
        zn[j] = gate_value(net.gate, act.s[i][j], act.t[i][j]);
    } else {
      for (size_t j = 0; j < zn.size(); ++j)
        zn[j] = gate_value(net.gate, act.s[i][j], 0.0);
    }
  }
  double y = net.out.b[0];
  const Matrix& vout = *eff.Vout;
  for (int c = 0; c < vout.cols(); ++c) y += vout(0, c) * act.z[L][c];
  for (int c = 0; c < net.out.W.cols(); ++c) y += net.out.W(0, c) * x[c];
  act.y = y;
  return act;
}

Vector input_gradient(const ConvexNet& net, const Vector& x) {
  check_input(net, x);
  EffWeights eff(net);
  const int L = net.depth();
  // Forward, keeping lane pre-activations.
  std::vector<Vector> zs(L + 1), ss(L), ts(L);
  zs[0] = Vector(net.input_dim, 0.0);
  for (int i = 0; i < L; ++i) {
    lane_preacts(net, eff, i, zs[i], x, ss[i], ts[i]);
    Vector& zn = zs[i + 1];
    zn.resize(ss[i].size());
    for (size_t j = 0; j < zn.size(); ++j)
      zn[j] = gate_value(net.gate, ss[i][j], net.gate.two_lane() ? ts[i][j] : 0.0);
  }
  // Reverse.
  Vector gx(net.input_dim, 0.0);
  for (int c = 0; c < net.out.W.cols(); ++c) gx[c] += net.out.W(0, c);
  const Matrix& vout = *eff.Vout;
  Vector u(vout.cols());
  for (int c = 0; c < vout.cols(); ++c) u[c] = vout(0, c);
  for (int i = L - 1; i >= 0; --i) {
    const HyLayer& layer = net.layers[i];
    const size_t w = ss[i].size();
    Vector a1(w), a2(w, 0.0);
    for (size_t j = 0; j < w; ++j) {
      double g1, g2;
      gate_grad(net.gate, ss[i][j], net.gate.two_lane() ? ts[i][j] : 0.0, g1, g2);
      a1[j] = u[j] * g1;
      if (net.gate.two_lane()) a2[j] = u[j] * g2;
    }
    matvec_t_acc(layer.W1, a1, gx);
    if (net.arch == Arch::ICNNq && i == 0) {
      Vector q = matvec(net.Wq, x);
      for (size_t j = 0; j < q.size(); ++j) q[j] = 2.0 * q[j] * a1[j];
      matvec_t_acc(net.Wq, q, gx);
    }
    if (net.gate.two_lane()) matvec_t_acc(layer.W2, a2, gx);
    if (i > 0) {
      Vector unew = matvec_t(*eff.V1[i], a1);
      if (net.gate.two_lane()) matvec_t_acc(*eff.V2[i], a2, unew);
      u.swap(unew);
    }
  }
  return gx;
}

void validate_net(const ConvexNet& net) {
  if (net.input_dim <= 0) throw ContractViolation("net: input_dim must be positive");
  if (net.gate.kind == GateKind::LogSumExp && !(net.gate.tau > 0.0))
    throw ContractViolation("net: LogSumExp tau must be > 0");
  if (net.gate.kind == GateKind::Softplus && !(net.gate.tau > 0.0))
    throw ContractViolation("net: Softplus tau must be > 0");
  if (net.gate.kind == GateKind::LeakyReLU &&
      !(net.gate.alpha > 0.0 && net.gate.alpha < 1.0))
    throw ContractViolation("net: LeakyReLU alpha must be in (0,1)");
  int prev = net.input_dim;
  for (int i = 0; i < net.depth(); ++i) {
    const HyLayer& l = net.layers[i];
    const int w = static_cast<int>(l.b1.size());
    auto check_mat = [&](const Matrix& m, int r, int c, const char* name) {
      if (m.rows() != r || m.cols() != c)
        throw ContractViolation(std::string("net: bad shape for ") + name);
    };
    check_mat(l.V1_raw, w, prev, "V1");
    check_mat(l.W1, w, net.input_dim, "W1");
    if (net.gate.two_lane()) {
      check_mat(l.V2_raw, w, prev, "V2");
      check_mat(l.W2, w, net.input_dim, "W2");
      if (l.b2.size() != static_cast<size_t>(w))
        throw ContractViolation("net: bad shape for b2");
    }
    if (net.enforce_nonneg && !l.reparam) {
      for (double v : l.V1_raw.data())
        if (v < 0.0) throw ContractViolation("net: negative V1 entry in constrained net");
      for (double v : l.V2_raw.data())
        if (v < 0.0) throw ContractViolation("net: negative V2 entry in constrained net");
    }
    prev = w;
  }
  if (net.out.V_raw.rows() != 1 || net.out.V_raw.cols() != prev ||
      net.out.W.rows() != 1 || net.out.W.cols() != net.input_dim ||
      net.out.b.size() != 1)
    throw ContractViolation("net: bad output layer shape");
  if (net.enforce_nonneg && !net.out.reparam) {
    for (double v : net.out.V_raw.data())
      if (v < 0.0) throw ContractViolation("net: negative output V entry");
  }
  if (net.arch == Arch::ICNNq) {
    if (net.Wq.rows() != net.width(0) || net.Wq.cols() != net.input_dim)
      throw ContractViolation("net: bad Wq shape");
  }
}

// --- Initializers ------------------------------------------------------

namespace {

Matrix gaussian_matrix(Rng& rng, int rows, int cols, double stddev) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = stddev * rng.normal();
  return m;
}

Matrix uniform_matrix(Rng& rng, int rows, int cols, double bound) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

// Effective log-normal weights with the given moments; stores the softplus
// pre-image so training on the raw parameter preserves nonnegativity.
Matrix lognormal_reparam_matrix(Rng& rng, int rows, int cols, double mean,
                                double var) {
  Matrix m(rows, cols);
  Vector draws = sample_lognormal(rng, mean, var, rows * cols);
  for (size_t i = 0; i < m.data().size(); ++i)
    m.data()[i] = softplus_inverse(std::max(draws[i], 1e-300));
  return m;
}

}  // namespace

ConvexNet init_hycnn(const std::vector<int>& shape, int input_dim, Rng& rng,
                     GateSpec gate) {
  if (shape.empty()) throw ContractViolation("init_hycnn: shape must be non-empty");
  ConvexNet net;
  net.arch = Arch::HyCNN;
  net.input_dim = input_dim;
  net.gate = gate;
  const int L = static_cast<int>(shape.size());
  Rng base(rng.u64());
  int prev = input_dim;
  for (int i = 0; i < L; ++i) {
    HyLayer layer;
    const int w = shape[i];
    if (i == 0) {
      // LeCun first layer; V multiplies z0 = 0 and stays frozen at zero.
      layer.V1_raw = Matrix(w, prev);
      layer.V2_raw = Matrix(w, prev);
      layer.reparam = false;
      const double sd = 1.0 / std::sqrt(static_cast<double>(input_dim));
      Rng r1 = base.split(0, 1), r2 = base.split(0, 2);
      layer.W1 = gaussian_matrix(r1, w, input_dim, sd);
      layer.W2 = gaussian_matrix(r2, w, input_dim, sd);
      Rng rb1 = base.split(0, 3), rb2 = base.split(0, 4);
      layer.b1.resize(w);
      layer.b2.resize(w);
      for (auto& v : layer.b1) v = sd * rb1.normal();
      for (auto& v : layer.b2) v = sd * rb2.normal();
    } else {
      const double d = static_cast<double>(prev);
      const double mu = 1.0 / std::sqrt(d * d + (1.0 - 1.0 / kPi) * d);
      const double var = 1.0 / (4.0 * d);
      layer.reparam = true;
      Rng rv1 = base.split(i, 1), rv2 = base.split(i, 2);
      layer.V1_raw = lognormal_reparam_matrix(rv1, w, prev, mu, var);
      layer.V2_raw = lognormal_reparam_matrix(rv2, w, prev, mu, var);
      const double sw = 1.0 / (2.0 * std::sqrt(static_cast<double>(input_dim)));
      Rng rw1 = base.split(i, 3), rw2 = base.split(i, 4);
      layer.W1 = gaussian_matrix(rw1, w, input_dim, sw);
      layer.W2 = gaussian_matrix(rw2, w, input_dim, sw);
      const double bias = -std::sqrt(d / (2.0 * kPi * d + 2.0 * kPi - 2.0));
      layer.b1.assign(w, bias);
      layer.b2.assign(w, bias);
    }
    net.layers.push_back(std::move(layer));
    prev = w;
  }
  {
    const double d = static_cast<double>(prev);
    const double mu = 1.0 / std::sqrt(d * d + (1.0 - 1.0 / kPi) * d);
    const double var = 1.0 / (4.0 * d);
    Rng rv = base.split(L, 1);
    net.out.V_raw = lognormal_reparam_matrix(rv, 1, prev, mu, var);
    net.out.reparam = true;
    const double sw = 1.0 / (2.0 * std::sqrt(static_cast<double>(input_dim)));
    Rng rw = base.split(L, 3);
    net.out.W = gaussian_matrix(rw, 1, input_dim, sw);
    net.out.b.assign(1, -std::sqrt(d / (2.0 * kPi * d + 2.0 * kPi - 2.0)));
  }
  validate_net(net);
  net.ensure_cache();
  return net;
}

ConvexNet init_groupmax(const std::vector<int>& shape, int input_dim, Rng& rng,
                        GateSpec gate) {
  ConvexNet net = init_hycnn(shape, input_dim, rng, gate);
  net.arch = Arch::GroupMax;
  for (int i = 1; i < net.depth(); ++i) {
    net.layers[i].W1 = Matrix(net.width(i), input_dim);
    net.layers[i].W2 = Matrix(net.width(i), input_dim);
  }
  net.out.W = Matrix(1, input_dim);
  net.bump_version();
  net.ensure_cache();
  return net;
}

ConvexNet init_icnn_hoedt(const std::vector<int>& shape, int input_dim,
                          Rng& rng, WeightStyle style, GateSpec gate,
                          bool quadratic_skip) {
  if (shape.empty())
    throw ContractViolation("init_icnn_hoedt: shape must be non-empty");
  if (gate.two_lane())
    throw ContractViolation("init_icnn_hoedt: expects a single-lane gate");
  ConvexNet net;
  net.arch = quadratic_skip ? Arch::ICNNq : Arch::ICNN;
  net.input_dim = input_dim;
  net.gate = gate;
  net.enforce_nonneg = style == WeightStyle::LogNormal;
  const int L = static_cast<int>(shape.size());
  Rng base(rng.u64());
  auto hoedt_D = [](double n) {
    return 6.0 * (kPi - 1.0) + (n - 1.0) * (3.0 * std::sqrt(3.0) + 2.0 * kPi - 6.0);
  };
  int prev = input_dim;
  for (int i = 0; i < L; ++i) {
    HyLayer layer;
    const int w = shape[i];
    const double n = static_cast<double>(prev);
    const double D = hoedt_D(n);
    Rng rv = base.split(i, 1), rw = base.split(i, 3);
    if (i == 0) {
      layer.V1_raw = Matrix(w, prev);
      layer.reparam = false;
    } else {
      const double mu_w = std::sqrt(6.0 * kPi / (n * D));
      const double var_w = 1.0 / n;
      if (style == WeightStyle::LogNormal) {
        layer.V1_raw = lognormal_reparam_matrix(rv, w, prev, mu_w, var_w);
        layer.reparam = true;
      } else {
        layer.V1_raw = gaussian_matrix(rv, w, prev, std::sqrt(var_w));
        for (auto& v : layer.V1_raw.data()) v += mu_w;
        layer.reparam = false;
      }
    }
    layer.V2_raw = Matrix(w, prev);
    layer.W1 = gaussian_matrix(rw, w, input_dim, 1.0 / std::sqrt(n));
    layer.W2 = Matrix(w, input_dim);
    layer.b1.assign(w, -std::sqrt(3.0 * n / D));
    layer.b2.assign(w, 0.0);
    net.layers.push_back(std::move(layer));
    prev = w;
  }
  {
    const double n = static_cast<double>(prev);
    const double D = hoedt_D(n);
    const double mu_w = std::sqrt(6.0 * kPi / (n * D));
    Rng rv = base.split(L, 1), rw = base.split(L, 3);
    if (style == WeightStyle::LogNormal) {
      net.out.V_raw = lognormal_reparam_matrix(rv, 1, prev, mu_w, 1.0 / n);
      net.out.reparam = true;
    } else {
      net.out.V_raw = gaussian_matrix(rv, 1, prev, 1.0 / std::sqrt(n));
      for (auto& v : net.out.V_raw.data()) v += mu_w;
      net.out.reparam = false;
    }
    net.out.W = gaussian_matrix(rw, 1, input_dim, 1.0 / std::sqrt(n));
    net.out.b.assign(1, 0.0);
  }
  if (quadratic_skip) {
    Rng rq = base.split(7, 7);
    net.Wq = gaussian_matrix(rq, shape[0], input_dim,
                             1.0 / std::sqrt(static_cast<double>(input_dim)));
  }
  validate_net(net);
  net.ensure_cache();
  return net;
}

ConvexNet init_mlp(const std::vector<int>& shape, int input_dim, Rng& rng,
                   GateSpec gate) {
  if (shape.empty()) throw ContractViolation("init_mlp: shape must be non-empty");
  if (gate.two_lane())
    throw ContractViolation("init_mlp: expects a single-lane gate");
  ConvexNet net;
  net.arch = Arch::MLP;
  net.input_dim = input_dim;
  net.gate = gate;
  net.enforce_nonneg = false;
  const int L = static_cast<int>(shape.size());
  Rng base(rng.u64());
  int prev = input_dim;
  for (int i = 0; i < L; ++i) {
    HyLayer layer;
    const int w = shape[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    Rng rm = base.split(i, 1), rb = base.split(i, 2);
    if (i == 0) {
      layer.V1_raw = Matrix(w, prev);
      layer.W1 = uniform_matrix(rm, w, input_dim, bound);
    } else {
      layer.V1_raw = uniform_matrix(rm, w, prev, bound);
      layer.W1 = Matrix(w, input_dim);
    }
    layer.V2_raw = Matrix(w, prev);
    layer.W2 = Matrix(w, input_dim);
    layer.b1.resize(w);
    for (auto& v : layer.b1) v = rb.uniform(-bound, bound);
    layer.b2.assign(w, 0.0);
    layer.reparam = false;
    net.layers.push_back(std::move(layer));
    prev = w;
  }
  {
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    Rng rm = base.split(L, 1), rb = base.split(L, 2);
    net.out.V_raw = uniform_matrix(rm, 1, prev, bound);
    net.out.W = Matrix(1, input_dim);
    net.out.b.assign(1, rb.uniform(-bound, bound));
    net.out.reparam = false;
  }
  validate_net(net);
  net.ensure_cache();
  return net;
}

ConvexityReport check_convexity(const ConvexNet& net, Rng& rng, int trials,
                                double box_halfwidth) {
  ConvexityReport report;
  report.trials = trials;
  const int d = net.input_dim;
  Vector x1(d), x2(d), xm(d);
  for (int k = 0; k < trials; ++k) {
    for (int i = 0; i < d; ++i) {
      x1[i] = rng.uniform(-box_halfwidth, box_halfwidth);
      x2[i] = rng.uniform(-box_halfwidth, box_halfwidth);
    }
    const double t = rng.uniform01();
    for (int i = 0; i < d; ++i) xm[i] = t * x1[i] + (1.0 - t) * x2[i];
    const double f1 = forward(net, x1);
    const double f2 = forward(net, x2);
    const double fm = forward(net, xm);
    const double scale = std::max({1.0, std::fabs(f1), std::fabs(f2), std::fabs(fm)});
    const double violation = (fm - (t * f1 + (1.0 - t) * f2)) / scale;
    if (violation > report.max_relative_violation)
      report.max_relative_violation = violation;
  }
  return report;
}

// --- Serialization ------------------------------------------------------

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r), m.row(r) + m.cols()));
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (j.empty()) return Matrix();
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

Matrix raw_from_effective(const Matrix& eff, bool reparam) {
  if (!reparam) return eff;
  Matrix raw(eff.rows(), eff.cols());
  for (size_t i = 0; i < eff.data().size(); ++i)
    raw.data()[i] = softplus_inverse(std::max(eff.data()[i], 1e-300));
  return raw;
}

json gate_to_json(const GateSpec& g) {
  json j;
  switch (g.kind) {
    case GateKind::Max: j["kind"] = "max"; break;
    case GateKind::LogSumExp: j["kind"] = "logsumexp"; j["tau"] = g.tau; break;
    case GateKind::ReLU: j["kind"] = "relu"; break;
    case GateKind::LeakyReLU: j["kind"] = "leaky_relu"; j["alpha"] = g.alpha; break;
    case GateKind::Softplus: j["kind"] = "softplus"; j["tau"] = g.tau; break;
  }
  return j;
}

GateSpec gate_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "max") return GateSpec::max_gate();
  if (kind == "logsumexp") return GateSpec::logsumexp(j.at("tau").get<double>());
  if (kind == "relu") return GateSpec::relu();
  if (kind == "leaky_relu") return GateSpec::leaky_relu(j.at("alpha").get<double>());
  if (kind == "softplus") return GateSpec::softplus_gate(j.at("tau").get<double>());
  throw ConfigError("unknown gate kind: " + kind);
}

}  // namespace

std::string arch_name(Arch a) {
  switch (a) {
    case Arch::HyCNN: return "hycnn";
    case Arch::ICNN: return "icnn";
    case Arch::ICNNq: return "icnnq";
    case Arch::GroupMax: return "groupmax";
    case Arch::MLP: return "mlp";
  }
  return "hycnn";
}

Arch arch_from_name(const std::string& s) {
  if (s == "hycnn") return Arch::HyCNN;
  if (s == "icnn") return Arch::ICNN;
  if (s == "icnnq") return Arch::ICNNq;
  if (s == "groupmax") return Arch::GroupMax;
  if (s == "mlp") return Arch::MLP;
  throw ConfigError("unknown architecture: " + s);
}

std::string net_to_json(const ConvexNet& net, const std::string& meta_json) {
  json j;
  j["format"] = "hycnn-net-v1";
  j["arch"] = arch_name(net.arch);
  j["input_dim"] = net.input_dim;
  j["gate"] = gate_to_json(net.gate);
  j["dims"] = net.widths();
  j["enforce_nonneg"] = net.enforce_nonneg;
  json layers = json::array();
  for (int i = 0; i < net.depth(); ++i) {
    const HyLayer& l = net.layers[i];
    json lj;
    lj["V1"] = matrix_to_json(net.effective_V1(i));
    lj["V2"] = matrix_to_json(net.effective_V2(i));
    lj["W1"] = matrix_to_json(l.W1);
    lj["W2"] = matrix_to_json(l.W2);
    lj["b1"] = l.b1;
    lj["b2"] = l.b2;
    lj["reparam"] = l.reparam;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  json oj;
  oj["V"] = matrix_to_json(net.effective_Vout());
  oj["W"] = matrix_to_json(net.out.W);
  oj["b"] = net.out.b;
  oj["reparam"] = net.out.reparam;
  j["out"] = std::move(oj);
  if (net.arch == Arch::ICNNq) j["Wq"] = matrix_to_json(net.Wq);
  if (!meta_json.empty()) j["meta"] = json::parse(meta_json);
  return j.dump();
}

ConvexNet net_from_json(const std::string& text) {
  const json j = json::parse(text);
  ConvexNet net;
  net.arch = arch_from_name(j.at("arch").get<std::string>());
  net.input_dim = j.at("input_dim").get<int>();
  net.gate = gate_from_json(j.at("gate"));
  net.enforce_nonneg = j.value("enforce_nonneg", true);
  for (const auto& lj : j.at("layers")) {
    HyLayer l;
    l.reparam = lj.at("reparam").get<bool>();
    l.V1_raw = raw_from_effective(matrix_from_json(lj.at("V1")), l.reparam);
    l.V2_raw = raw_from_effective(matrix_from_json(lj.at("V2")), l.reparam);
    l.W1 = matrix_from_json(lj.at("W1"));
    l.W2 = matrix_from_json(lj.at("W2"));
    l.b1 = lj.at("b1").get<Vector>();
    l.b2 = lj.at("b2").get<Vector>();
    net.layers.push_back(std::move(l));
  }
  const auto& oj = j.at("out");
  net.out.reparam = oj.at("reparam").get<bool>();
  net.out.V_raw = raw_from_effective(matrix_from_json(oj.at("V")), net.out.reparam);
  net.out.W = matrix_from_json(oj.at("W"));
  net.out.b = oj.at("b").get<Vector>();
  if (j.contains("Wq")) net.Wq = matrix_from_json(j.at("Wq"));
  validate_net(net);
  net.ensure_cache();
  return net;
}

void save_net(const ConvexNet& net, const std::string& path,
              const std::string& meta_json) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << net_to_json(net, meta_json);
}

ConvexNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return net_from_json(ss.str());
}

}  // namespace hycnn
