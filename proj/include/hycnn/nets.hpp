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

#ifndef HYCNN_NETS_HPP
#define HYCNN_NETS_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hycnn/tensor.hpp"

namespace hycnn {

enum class Arch { HyCNN, ICNN, ICNNq, GroupMax, MLP };

enum class GateKind { Max, LogSumExp, ReLU, LeakyReLU, Softplus };

// Two-argument gating activation. Max/LogSumExp combine both lanes;
// ReLU/LeakyReLU/Softplus act on lane 1 only, which recovers the plain
// ICNN layer from the two-lane container.
struct GateSpec {
  GateKind kind = GateKind::Max;
  double tau = 1.0;     // LogSumExp / Softplus temperature
  double alpha = 0.2;   // LeakyReLU negative slope

  static GateSpec max_gate() { return {GateKind::Max, 1.0, 0.2}; }
  static GateSpec logsumexp(double tau);
  static GateSpec relu() { return {GateKind::ReLU, 1.0, 0.2}; }
  static GateSpec leaky_relu(double alpha);
  static GateSpec softplus_gate(double tau);

  bool two_lane() const {
    return kind == GateKind::Max || kind == GateKind::LogSumExp;
  }
  bool smooth() const {
    return kind == GateKind::LogSumExp || kind == GateKind::Softplus;
  }
  bool piecewise_affine() const { return !smooth(); }
};

double gate_value(const GateSpec& g, double s, double t);
// First partials with respect to the two lane pre-activations. MaxGate ties
// route the lane-1 subgradient.
void gate_grad(const GateSpec& g, double s, double t, double& g1, double& g2);
// Second partials; only defined for the smooth gates.
void gate_grad2(const GateSpec& g, double s, double t, double& d11,
                double& d12, double& d22);

// One hidden layer. V matrices act on the previous hidden state, W matrices
// on the network input, b are biases; one set per lane. When `reparam` is
// set the effective hidden-to-hidden weight is softplus(V*_raw) entrywise,
// otherwise the raw value is used directly (and must be nonnegative for the
// constrained architectures).
struct HyLayer {
  Matrix V1_raw, V2_raw;
  Matrix W1, W2;
  Vector b1, b2;
  bool reparam = false;
};

struct OutLayer {
  Matrix V_raw;  // 1 x d_L
  Matrix W;      // 1 x d
  Vector b;      // length 1
  bool reparam = false;
};

struct ConvexNet {
  Arch arch = Arch::HyCNN;
  int input_dim = 0;
  std::vector<HyLayer> layers;
  OutLayer out;
  GateSpec gate;
  Matrix Wq;  // ICNNq only: first-layer quadratic skip, d_1 x d
  // False for MLPs and for soft-penalized critics whose raw hidden-to-hidden
  // weights may go negative during training.
  bool enforce_nonneg = true;
  // Bumped on every parameter mutation; invalidates recorded tapes.
  uint64_t version = 0;

  int depth() const { return static_cast<int>(layers.size()); }
  int width(int layer) const { return static_cast<int>(layers[layer].b1.size()); }
  std::vector<int> widths() const;

  Matrix effective_V1(int layer) const;
  Matrix effective_V2(int layer) const;
  Matrix effective_Vout() const;

  void bump_version() {
    ++version;
  }
  // Refresh the effective-weight cache; call after mutating parameters and
  // before sharing the net across evaluation threads.
  void ensure_cache();
  bool cache_valid() const { return cache_version_ == version; }
  const Matrix& cached_V1(int layer) const { return V1_cache_[layer]; }
  const Matrix& cached_V2(int layer) const { return V2_cache_[layer]; }
  const Matrix& cached_Vout() const { return Vout_cache_; }
  // d(effective)/d(raw) per entry; all-ones when not reparametrized.
  const Matrix& cached_V1_chain(int layer) const { return V1_chain_cache_[layer]; }
  const Matrix& cached_V2_chain(int layer) const { return V2_chain_cache_[layer]; }

 private:
  std::vector<Matrix> V1_cache_, V2_cache_;
  std::vector<Matrix> V1_chain_cache_, V2_chain_cache_;
  Matrix Vout_cache_;
  uint64_t cache_version_ = std::numeric_limits<uint64_t>::max();
};

Matrix effective_of(const Matrix& raw, bool reparam);

// Shape compatibility, gate parameter ranges, and (for constrained nets
// without reparametrization) nonnegativity of raw hidden-to-hidden weights.
void validate_net(const ConvexNet& net);

double forward(const ConvexNet& net, const Vector& x);

// Pre-activations and hidden states of one forward pass. t is empty for
// single-lane gates.
struct Activations {
  std::vector<Vector> z;  // z[0] = 0_d, ..., z[L]
  std::vector<Vector> s, t;
  double y = 0.0;
};
Activations forward_trace(const ConvexNet& net, const Vector& x);

// Gradient of forward with respect to the input, one reverse pass.
Vector input_gradient(const ConvexNet& net, const Vector& x);

// --- Initializers ------------------------------------------------------

// Log-normal hidden-to-hidden weights with mean 1/sqrt(d^2 + (1-1/pi) d) and
// variance 1/(4 d) for fan-in d; Gaussian skips N(0, 1/(4 input_dim));
// constant biases -sqrt(d/(2 pi d + 2 pi - 2)); first layer N(0, 1/input_dim)
// throughout. The prescribed moments are written into the effective weights
// and the softplus pre-image is stored.
ConvexNet init_hycnn(const std::vector<int>& shape, int input_dim, Rng& rng,
                     GateSpec gate = GateSpec::max_gate());

// HyCNN scheme with all input skip connections beyond the first layer
// zeroed; training keeps them frozen.
ConvexNet init_groupmax(const std::vector<int>& shape, int input_dim, Rng& rng,
                        GateSpec gate = GateSpec::max_gate());

enum class WeightStyle { LogNormal, Gaussian };

// ICNN scheme with weight moments mu_W = sqrt(6 pi / (n D_n)),
// sigma_W^2 = 1/n, D_n = 6(pi - 1) + (n - 1)(3 sqrt(3) + 2 pi - 6) for fan-in
// n, biases -sqrt(3 n / D_n), input weights N(0, 1/n), output bias zero.
// LogNormal style stores a softplus-reparametrized nonnegative weight
// (potentials); Gaussian style stores an unconstrained weight directly
// (critics).
ConvexNet init_icnn_hoedt(const std::vector<int>& shape, int input_dim,
                          Rng& rng, WeightStyle style,
                          GateSpec gate = GateSpec::relu(),
                          bool quadratic_skip = false);

// Plain single-lane ReLU tower without input skips or nonnegativity
// constraints; weights and biases Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ConvexNet init_mlp(const std::vector<int>& shape, int input_dim, Rng& rng,
                   GateSpec gate = GateSpec::relu());

// --- Convexity check ----------------------------------------------------

struct ConvexityReport {
  int trials = 0;
  // max over trials of (f(mid) - interpolated bound) / scale, floored at 0.
  double max_relative_violation = 0.0;
};

ConvexityReport check_convexity(const ConvexNet& net, Rng& rng, int trials,
                                double box_halfwidth = 10.0);

// --- Serialization ------------------------------------------------------

// JSON document {arch, gate, dims, layers:[{V1,V2,W1,W2,b1,b2}], out}, with
// weights stored as effective (post-softplus) values plus reparam flags.
// An optional metadata block survives the round trip untouched.
std::string net_to_json(const ConvexNet& net, const std::string& meta_json = "");
ConvexNet net_from_json(const std::string& text);
void save_net(const ConvexNet& net, const std::string& path,
              const std::string& meta_json = "");
ConvexNet load_net(const std::string& path);

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& s);

}  // namespace hycnn

#endif  // HYCNN_NETS_HPP
