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

#ifndef HYCNN_THEORY_HPP
#define HYCNN_THEORY_HPP

#include <string>
#include <vector>

#include "hycnn/nets.hpp"

namespace hycnn {

// Exact univariate piecewise-affine function on a working interval
// [lo, hi]: strictly increasing interior breakpoints, one slope per piece,
// and the value at lo. Continuity holds by construction; the function is
// convex iff the slopes are nondecreasing.
class PiecewiseAffine1D {
 public:
  PiecewiseAffine1D() = default;
  // Single affine piece.
  static PiecewiseAffine1D affine(double lo, double hi, double value_at_lo,
                                  double slope);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double anchor_value() const { return anchor_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }

  double value(double x) const;
  int piece_count(double slope_jump_tol = 1e-10) const;
  bool convex(double tol = 1e-12) const;

  // Linear combination sum_i coeffs[i] * parts[i] + slope * x + offset.
  static PiecewiseAffine1D linear_combination(
      const std::vector<const PiecewiseAffine1D*>& parts,
      const std::vector<double>& coeffs, double slope, double offset);
  static PiecewiseAffine1D max_of(const PiecewiseAffine1D& a,
                                  const PiecewiseAffine1D& b);

 private:
  double lo_ = 0.0, hi_ = 1.0;
  double anchor_ = 0.0;
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;       // breakpoints_.size() + 1
  std::vector<double> bp_values_;    // cached values at breakpoints_
  void rebuild_values();
  friend PiecewiseAffine1D pwa_gate(const GateSpec&, const PiecewiseAffine1D&,
                                    const PiecewiseAffine1D&);
};

// Exact piecewise-affine representation of a 1-D-input network with a
// piecewise-affine gate, restricted to [lo, hi]. Smooth gates and the
// quadratic first-layer skip are rejected.
PiecewiseAffine1D pwa_of_network(const ConvexNet& net, double lo, double hi);

// Same, along the line t -> origin + t * direction for multivariate nets.
PiecewiseAffine1D pwa_of_network_along(const ConvexNet& net, double lo,
                                       double hi, const Vector& origin,
                                       const Vector& direction);

// Exact sup_{x in [0,1]} |p(x) - x^2|, evaluated in closed form per piece
// (the interior extremum of an affine-vs-parabola gap sits where the piece
// slope equals 2x).
double sup_error_vs_quadratic(const PiecewiseAffine1D& p);

struct ConstructionCertificate {
  std::string target;
  std::vector<int> widths;
  double claimed_bound = 0.0;
  double measured = 0.0;
  std::string method;  // "exact-per-piece" or "grid(N)"
  bool pass = false;
};

std::string certificate_to_json(const ConstructionCertificate& cert);

// Max-gate HyCNN approximating x^2 on [0,1] to within 1/(8 prod(widths)^2),
// with all hidden-to-hidden and skip weights nonnegative. Widths must be
// even and >= 2. The certificate is verified exactly through the PWA.
struct QuadraticBuild {
  ConvexNet net;
  ConstructionCertificate cert;
};
QuadraticBuild build_quadratic_hycnn(const std::vector<int>& widths);

// Variant with the output constant shifted so that 0 <= f(x) <= x on [0,1]
// (error bound doubles to 1/(4 prod(widths)^2)); the building block of the
// monomial construction.
QuadraticBuild build_quadratic_positive(const std::vector<int>& widths);

// Width-2, depth-L net whose error against x^2 equals 2^(-2L-3) exactly.
QuadraticBuild build_quadratic_width2(int L);

// f(x) = h(g(x), x) as a single max-gate HyCNN with depth(g) + depth(h)
// hidden layers; h's weights on the g-output slot (its first input
// coordinate) must be nonnegative.
ConvexNet compose_hycnn(const ConvexNet& g, const ConvexNet& h);

// Two-input net with htilde(u*y, y) = y*h(u) for y >= 0: biases become
// coefficients of the second input.
ConvexNet homogenize(const ConvexNet& h);

// Two-input net ignoring its second input: htilde(y, x) = h(y).
ConvexNet add_passthrough_input(const ConvexNet& h);

// Max-gate HyCNN approximating x^n on [0,1] within (n/2) (m-1)^(-2L) using
// ceil(log2 n) * L hidden layers of at most m neurons (m odd >= 3), built by
// composing squaring blocks through the operators f -> f^2 and f -> f^2/x
// chosen by the binary expansion of 2^ceil(log2 n) - n.
struct MonomialBuild {
  ConvexNet net;
  ConstructionCertificate cert;
  std::vector<ConvexNet> iterates;  // h_1 ... h_k, each with 0 <= h_i(x) <= x
};
MonomialBuild build_monomial_hycnn(int n, int L, int m);

// HyCNN on R^d approximating |x|^2 on [0,1]^d within
// (d/8) min_{p q >= d} floor((m-1)/q - 1)^(-2 floor(L/p)), built from
// parallel copies of the univariate net plus an accumulator neuron.
QuadraticBuild build_multivariate_quadratic(int d, int L, int m);

// Brute-force minimum of sup_{[0,1]} |g - x^2| over convex piecewise-affine
// g with at most k pieces: breakpoints on a grid, per-piece Chebyshev lines,
// upper envelope. Tight at the equal partition with value 1/(8 k^2).
double lower_bound_search(int k, double resolution = 0.01);

// Rewrites a max-gate HyCNN as a plain ReLU network of width 3m + 2d by
// storing (x)+, (-x)+ and, per neuron, (a1)+, (-a1)+, (a2 - a1)+.
ConvexNet hycnn_to_relu(const ConvexNet& net);

struct EmbeddingReport {
  double icnn_to_hycnn_max_diff = 0.0;
  double hycnn_to_relu_max_diff = 0.0;
  // Separation witness: the (2,2,2,2) construction error against the
  // expressivity floor of any ReLU ICNN with the same layer budget.
  double hycnn_2222_error = 0.0;
  double icnn_floor_same_budget = 0.0;
  bool pass = false;
};
EmbeddingReport embedding_checks(Rng& rng, int inputs_per_check = 1000);

}  // namespace hycnn

#endif  // HYCNN_THEORY_HPP
