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

#include "hycnn/tensor.hpp"

#include <cmath>

namespace hycnn {

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != static_cast<int>(v.size()))
    throw ContractViolation("matvec: dimension mismatch");
  Vector y(m.rows(), 0.0);
  for (int r = 0; r < m.rows(); ++r) {
    const double* mr = m.row(r);
    double acc = 0.0;
    for (int c = 0; c < m.cols(); ++c) acc += mr[c] * v[c];
    y[r] = acc;
  }
  return y;
}

Vector matvec_t(const Matrix& m, const Vector& v) {
  if (m.rows() != static_cast<int>(v.size()))
    throw ContractViolation("matvec_t: dimension mismatch");
  Vector y(m.cols(), 0.0);
  for (int r = 0; r < m.rows(); ++r) {
    const double* mr = m.row(r);
    const double vr = v[r];
    for (int c = 0; c < m.cols(); ++c) y[c] += mr[c] * vr;
  }
  return y;
}

void matvec_acc(const Matrix& m, const Vector& v, Vector& y, double alpha) {
  if (m.cols() != static_cast<int>(v.size()) ||
      m.rows() != static_cast<int>(y.size()))
    throw ContractViolation("matvec_acc: dimension mismatch");
  for (int r = 0; r < m.rows(); ++r) {
    const double* mr = m.row(r);
    double acc = 0.0;
    for (int c = 0; c < m.cols(); ++c) acc += mr[c] * v[c];
    y[r] += alpha * acc;
  }
}

void matvec_t_acc(const Matrix& m, const Vector& v, Vector& y, double alpha) {
  if (m.rows() != static_cast<int>(v.size()) ||
      m.cols() != static_cast<int>(y.size()))
    throw ContractViolation("matvec_t_acc: dimension mismatch");
  for (int r = 0; r < m.rows(); ++r) {
    const double* mr = m.row(r);
    const double vr = alpha * v[r];
    for (int c = 0; c < m.cols(); ++c) y[c] += mr[c] * vr;
  }
}

void add_outer(Matrix& m, const Vector& a, const Vector& b, double scale) {
  if (m.rows() != static_cast<int>(a.size()) ||
      m.cols() != static_cast<int>(b.size()))
    throw ContractViolation("add_outer: dimension mismatch");
  for (int r = 0; r < m.rows(); ++r) {
    double* mr = m.row(r);
    const double ar = scale * a[r];
    for (int c = 0; c < m.cols(); ++c) mr[c] += ar * b[c];
  }
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ContractViolation("dot: length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw ContractViolation("axpy: length mismatch");
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double logsumexp2(double a, double b, double tau) {
  if (!(tau > 0.0)) throw ContractViolation("logsumexp2: tau must be > 0");
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  // exp argument is <= 0; a huge gap underflows to exp(-inf) = 0 gracefully.
  return hi + tau * std::log1p(std::exp((lo - hi) / tau));
}

double softplus(double x) {
  if (x > 30.0) return x + std::exp(-x);
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw ContractViolation("softplus_inverse: y must be > 0");
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double Rng::normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

Vector sample_lognormal(Rng& rng, double mean, double var, int n) {
  if (!(mean > 0.0)) throw ContractViolation("sample_lognormal: mean must be > 0");
  if (!(var > 0.0)) throw ContractViolation("sample_lognormal: var must be > 0");
  const double t = mean * mean + var;
  const double loc = std::log(mean * mean / std::sqrt(t));
  const double scale = std::sqrt(std::log(t / (mean * mean)));
  Vector out(n);
  for (int i = 0; i < n; ++i) out[i] = std::exp(loc + scale * rng.normal());
  return out;
}

}  // namespace hycnn
