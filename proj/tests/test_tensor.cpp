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

#include <cmath>

#include "doctest.h"
#include "hycnn/tensor.hpp"

using namespace hycnn;

TEST_CASE("matvec basics") {
  Matrix id(2, 2);
  id(0, 0) = 1.0;
  id(1, 1) = 1.0;
  Vector v{3.0, -1.0};
  Vector y = matvec(id, v);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == -1.0);

  Matrix m(2, 2);
  m(0, 0) = 1; m(0, 1) = 2; m(1, 0) = 3; m(1, 1) = 4;
  y = matvec(m, Vector{1.0, 1.0});
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 7.0);

  Matrix z(3, 3);
  y = matvec(z, Vector{1.0, 2.0, 3.0});
  for (double e : y) CHECK(e == 0.0);

  CHECK_THROWS_AS(matvec(m, Vector{1.0, 2.0, 3.0}), ContractViolation);
}

TEST_CASE("matvec transpose and outer") {
  Matrix m(2, 3);
  m(0, 0) = 1; m(0, 1) = 2; m(0, 2) = 3;
  m(1, 0) = 4; m(1, 1) = 5; m(1, 2) = 6;
  Vector y = matvec_t(m, Vector{1.0, 1.0});
  CHECK(y == Vector{5.0, 7.0, 9.0});
  Matrix acc(2, 3);
  add_outer(acc, Vector{1.0, 2.0}, Vector{1.0, 0.0, -1.0});
  CHECK(acc(0, 0) == 1.0);
  CHECK(acc(1, 2) == -2.0);
}

TEST_CASE("logsumexp2 examples") {
  CHECK(logsumexp2(0.0, 0.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // Forced shift stability: exp(705) would overflow without the max shift.
  CHECK(logsumexp2(5.0, 705.0, 1.0) == 705.0);
  // Closed form evaluated in extended precision.
  const long double oracle =
      1.0L + 0.1L * std::log1p(std::exp(-10.0L));
  CHECK(logsumexp2(1.0, 0.0, 0.1) ==
        doctest::Approx(static_cast<double>(oracle)).epsilon(1e-14));
  CHECK_THROWS_AS(logsumexp2(0.0, 0.0, 0.0), ContractViolation);
  CHECK_THROWS_AS(logsumexp2(0.0, 0.0, -1.0), ContractViolation);
}

TEST_CASE("logsumexp2 sandwich property") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double b = rng.uniform(-50.0, 50.0);
    const double tau = std::exp(rng.uniform(-3.0, 3.0));
    const double v = logsumexp2(a, b, tau);
    const double hi = std::max(a, b);
    CHECK(v >= hi);
    CHECK(v <= hi + tau * std::log(2.0) + 1e-12);
  }
  // tau -> 0 recovers the max.
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-5.0, 5.0);
    const double b = rng.uniform(-5.0, 5.0);
    const double v = logsumexp2(a, b, 1e-6);
    CHECK(std::fabs(v - std::max(a, b)) <= 1e-6 * std::log(2.0) + 1e-12);
  }
  // No overflow near the double range.
  CHECK(std::isfinite(logsumexp2(1e300, -1e300, 1.0)));
  CHECK(logsumexp2(1e300, 1e300, 1.0) == doctest::Approx(1e300));
}

TEST_CASE("softplus and inverse") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(50.0) == doctest::Approx(50.0).epsilon(1e-15));
  CHECK(softplus_inverse(std::log(2.0)) == doctest::Approx(0.0));
  for (double y = 1e-8; y <= 1e8; y *= 10.0) {
    const double round = softplus(softplus_inverse(y));
    CHECK(std::fabs(round - y) <= 1e-12 * y);
  }
  CHECK_THROWS_AS(softplus_inverse(0.0), ContractViolation);
  CHECK_THROWS_AS(softplus_inverse(-1.0), ContractViolation);
}

TEST_CASE("rng determinism and splitting") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.u64() == b.u64());
  Rng c(42), d(43);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (c.u64() == d.u64());
  CHECK(same == 0);
  // Children depend on tags, not on parent draw position.
  Rng p(99);
  Rng child_before = p.split(3, 1);
  p.u64();
  p.u64();
  Rng child_after = p.split(3, 1);
  CHECK(child_before.u64() == child_after.u64());
  Rng other = p.split(3, 2);
  CHECK(p.split(3, 1).u64() != other.u64());
}

TEST_CASE("sample_lognormal moments") {
  Rng rng(2024);
  const int n = 1000000;
  Vector xs = sample_lognormal(rng, 0.5, 0.25, n);
  double mean = 0.0;
  for (double x : xs) {
    CHECK(x > 0.0);
    mean += x;
  }
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (n - 1);
  CHECK(std::fabs(mean - 0.5) < 0.002);
  CHECK(std::fabs(var - 0.25) < 0.01);

  // The underlying normal has location ln(mu^2/sqrt(t)) and variance
  // ln(t/mu^2) with t = mu^2 + var.
  const double loc = std::log(0.25 / std::sqrt(0.5));
  const double s2 = std::log(2.0);
  CHECK(loc == doctest::Approx(-1.0397207708399179).epsilon(1e-12));
  double lmean = 0.0;
  for (double x : xs) lmean += std::log(x);
  lmean /= n;
  double lvar = 0.0;
  for (double x : xs) lvar += (std::log(x) - lmean) * (std::log(x) - lmean);
  lvar /= (n - 1);
  CHECK(std::fabs(lmean - loc) < 0.005);
  CHECK(std::fabs(lvar - s2) < 0.01);

  // Degenerate limit: tiny variance concentrates at the mean.
  Vector ys = sample_lognormal(rng, 1.0, 1e-12, 4);
  for (double y : ys) CHECK(y == doctest::Approx(1.0).epsilon(1e-4));

  CHECK_THROWS_AS(sample_lognormal(rng, 0.0, 1.0, 1), ContractViolation);
  CHECK_THROWS_AS(sample_lognormal(rng, 1.0, 0.0, 1), ContractViolation);
}
