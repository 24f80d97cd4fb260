// Copyright 2026 The proknow Authors.
//
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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"

namespace proknow {
namespace {

TEST(PairedTTest, ClosedFormExample) {
  const std::vector<double> a{1, 2, 4}, b{0, 0, 1};
  const auto r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 3.4641, 1e-3);
  EXPECT_NEAR(r.t, std::sqrt(12.0), 1e-12);
  EXPECT_DOUBLE_EQ(r.df, 2.0);
  EXPECT_NEAR(r.p, 0.0742, 2e-3);
}

// Student t with 1 and 2 degrees of freedom has elementary CDFs.
TEST(PairedTTest, TwoSidedPMatchesElementaryCdfs) {
  for (double t : {0.0, 0.3, 1.0, 2.5, 3.4641, 7.0, 30.0}) {
    EXPECT_NEAR(student_t_two_sided_p(t, 2.0), 1.0 - t / std::sqrt(t * t + 2.0), 1e-10) << t;
    EXPECT_NEAR(student_t_two_sided_p(t, 1.0), 1.0 - 2.0 / std::numbers::pi * std::atan(t), 1e-10) << t;
    EXPECT_NEAR(student_t_two_sided_p(-t, 2.0), student_t_two_sided_p(t, 2.0), 1e-14);
  }
}

TEST(PairedTTest, AntisymmetricInArguments) {
  const std::vector<double> a{0.3, 0.9, 0.4, 0.8}, b{0.1, 0.2, 0.6, 0.3};
  const auto ab = paired_t_test(a, b), ba = paired_t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
}

TEST(PairedTTest, Errors) {
  const std::vector<double> a{1, 2, 3};
  try {
    paired_t_test(a, a);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("zero-variance differences"), std::string::npos);
  }
  EXPECT_THROW(paired_t_test(a, std::vector<double>{1, 2}), DomainError);
}

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

TEST(Wilcoxon, HandRankedExample) {
  const std::vector<double> d{1, -2, 3, -4, 5};
  const auto r = wilcoxon_signed_rank(d, zeros(5));
  EXPECT_DOUBLE_EQ(r.w_plus, 9.0);
  EXPECT_DOUBLE_EQ(r.w_minus, 6.0);
  EXPECT_DOUBLE_EQ(r.w, 6.0);
  EXPECT_EQ(r.n_effective, 5u);
  EXPECT_TRUE(r.exact);
}

// Number of subsets of {1..n} per rank sum, by dynamic programming.
std::vector<double> subset_sum_counts(int n) {
  std::vector<double> c(static_cast<std::size_t>(n * (n + 1) / 2 + 1), 0.0);
  c[0] = 1.0;
  for (int k = 1; k <= n; ++k)
    for (int s = static_cast<int>(c.size()) - 1; s >= k; --s) c[static_cast<std::size_t>(s)] += c[static_cast<std::size_t>(s - k)];
  return c;
}

double exact_two_sided(int n, double w) {
  const auto c = subset_sum_counts(n);
  const int total = n * (n + 1) / 2;
  double hits = 0.0;
  for (int s = 0; s <= total; ++s)
    if (std::min(s, total - s) <= w) hits += c[static_cast<std::size_t>(s)];
  return hits / std::pow(2.0, n);
}

TEST(Wilcoxon, ExactPMatchesSubsetEnumeration) {
  const std::vector<double> d{1, -2, 3, -4, 5};
  EXPECT_NEAR(wilcoxon_signed_rank(d, zeros(5)).p, 26.0 / 32.0, 1e-12);
  EXPECT_NEAR(wilcoxon_signed_rank(d, zeros(5)).p, exact_two_sided(5, 6.0), 1e-12);
}

TEST(Wilcoxon, NormalApproximationTracksExactForMidSizedSamples) {
  for (int n = 8; n <= 12; ++n) {
    std::vector<double> ranks(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ranks[static_cast<std::size_t>(i)] = i + 1;
    for (int w = 0; w <= n * (n + 1) / 4; ++w) {
      const double exact = exact_two_sided(n, w);
      EXPECT_NEAR(wilcoxon_exact_p(ranks, w), exact, 1e-12);
      EXPECT_NEAR(wilcoxon_normal_p(ranks, w), exact, 0.025) << "n=" << n << " w=" << w;
    }
  }
}

TEST(Wilcoxon, TiesShareAverageRanks) {
  const std::vector<double> d{2, -2, 1, 0, 3};
  const auto r = wilcoxon_signed_rank(d, zeros(5));
  EXPECT_EQ(r.n_effective, 4u);
  EXPECT_DOUBLE_EQ(r.w_plus, 1.0 + 2.5 + 4.0);
  EXPECT_DOUBLE_EQ(r.w_minus, 2.5);
}

TEST(Wilcoxon, LargeSampleUsesNormalApproximation) {
  std::vector<double> d(20);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (i % 3 == 0 ? -1.0 : 1.0) * static_cast<double>(i + 1);
  const auto r = wilcoxon_signed_rank(d, zeros(d.size()));
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.p, 0.0);
  EXPECT_LE(r.p, 1.0);
}

TEST(Wilcoxon, DegenerateInput) {
  const std::vector<double> a{1, 2, 3};
  try {
    wilcoxon_signed_rank(a, a);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate: no nonzero differences"), std::string::npos);
  }
}

TEST(IncompleteBeta, BoundaryAndSymmetry) {
  EXPECT_DOUBLE_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
  for (double x : {0.1, 0.35, 0.5, 0.8}) {
    EXPECT_NEAR(incomplete_beta(2.5, 4.0, x), 1.0 - incomplete_beta(4.0, 2.5, 1.0 - x), 1e-12);
    EXPECT_NEAR(incomplete_beta(1.0, 1.0, x), x, 1e-12);
  }
}

}  // namespace
}  // namespace proknow
