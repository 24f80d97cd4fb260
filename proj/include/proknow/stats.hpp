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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "proknow/error.hpp"

namespace proknow {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees.
inline double student_t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Paired Student t-test on a - b.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("paired_t_test: length mismatch");
  if (a.size() < 2) throw DomainError("paired_t_test: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  if (!(var > 0.0)) throw DomainError("paired_t_test: zero-variance differences");
  TTestResult r;
  r.df = static_cast<double>(n - 1);
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

struct WilcoxonResult {
  double w = 0.0;       // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p = 1.0;       // two-sided
  std::size_t n_effective = 0;
  bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 12;

namespace detail {

// Average ranks (1-based) of |d| with ties sharing the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& magnitudes) {
  const std::size_t n = magnitudes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return magnitudes[i] < magnitudes[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && magnitudes[order[j + 1]] == magnitudes[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Exact two-sided p: fraction of the 2^n sign assignments whose min(W+, W-)
// is no larger than the observed statistic.
inline double wilcoxon_exact_p(std::span<const double> ranks, double w) {
  const std::size_t n = ranks.size();
  const double total = std::accumulate(ranks.begin(), ranks.end(), 0.0);
  const std::uint64_t assignments = std::uint64_t{1} << n;
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < assignments; ++mask) {
    double plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) plus += ranks[i];
    if (std::min(plus, total - plus) <= w + 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(assignments);
}

// Normal approximation with continuity and tie correction.
inline double wilcoxon_normal_p(std::span<const double> ranks, double w) {
  const double n = static_cast<double>(ranks.size());
  const double mean = n * (n + 1.0) / 4.0;
  double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    var -= (t * t * t - t) / 48.0;
    i = j;
  }
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, normal_two_sided_p(z));
}

// Wilcoxon signed-rank test on a - b. Zero differences are dropped; exact
// enumeration is used up to kWilcoxonExactLimit nonzero pairs.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("wilcoxon_signed_rank: length mismatch");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) diffs.push_back(a[i] - b[i]);
  if (diffs.empty()) throw DomainError("wilcoxon_signed_rank: degenerate: no nonzero differences");

  std::vector<double> magnitudes(diffs.size());
  std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
  const auto ranks = detail::average_ranks(magnitudes);

  WilcoxonResult r;
  r.n_effective = diffs.size();
  for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
  r.w = std::min(r.w_plus, r.w_minus);
  r.exact = r.n_effective <= kWilcoxonExactLimit;
  r.p = r.exact ? wilcoxon_exact_p(ranks, r.w) : wilcoxon_normal_p(ranks, r.w);
  return r;
}

}  // namespace proknow
