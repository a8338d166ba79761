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

#ifndef HYCNN_TENSOR_HPP
#define HYCNN_TENSOR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hycnn {

// Thrown when a documented precondition is violated.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what)
      : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Widths in this codebase stay small
// (<= 64), so there is no blocking or sparsity.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw ContractViolation("Matrix: negative dims");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  int rows_, cols_;
  std::vector<double> data_;
};

// y = M v
Vector matvec(const Matrix& m, const Vector& v);
// y = M^T v
Vector matvec_t(const Matrix& m, const Vector& v);
// m += a b^T
void add_outer(Matrix& m, const Vector& a, const Vector& b, double scale = 1.0);
// y += alpha * M v
void matvec_acc(const Matrix& m, const Vector& v, Vector& y, double alpha = 1.0);
// y += alpha * M^T v
void matvec_t_acc(const Matrix& m, const Vector& v, Vector& y, double alpha = 1.0);

double dot(const Vector& a, const Vector& b);
void axpy(double alpha, const Vector& x, Vector& y);

// tau * log(exp(a/tau) + exp(b/tau)), computed with a max shift so that no
// overflow occurs for |a|, |b| up to 1e300. Requires tau > 0.
double logsumexp2(double a, double b, double tau);

// log(1 + exp(x)) without overflow, and its inverse on (0, inf).
double softplus(double x);
double softplus_inverse(double y);
double sigmoid(double x);

// Counter-based deterministic generator (splitmix-style output function).
// Identical seeds give identical streams on every platform, and child
// generators derived from (seed, tag) pairs are independent of the order in
// which values are drawn elsewhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)), counter_(0) {}

  uint64_t u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform on (0, 1); never returns exactly 0 or 1.
  double uniform01() {
    return (static_cast<double>(u64() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal via Box-Muller (cosine branch only, stateless).
  double normal() ;
  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Child generator independent of this one's position in its stream.
  Rng split(uint64_t tag_a, uint64_t tag_b = 0) const {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(tag_a + 0x9e3779b97f4a7c15ULL) ^ mix(tag_b + 0xbf58476d1ce4e5b9ULL));
    child.counter_ = 0;
    return child;
  }

  uint64_t key() const { return key_; }

 private:
  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t counter_;
};

// n i.i.d. draws of X = exp(Xt), Xt ~ Normal(ln(mean^2/sqrt(t)), ln(t/mean^2))
// with t = mean^2 + var, so that E[X] = mean and Var[X] = var.
// Requires mean > 0 and var > 0.
Vector sample_lognormal(Rng& rng, double mean, double var, int n);

}  // namespace hycnn

#endif  // HYCNN_TENSOR_HPP
