#pragma once

// Set statistics on finite samples (weighted mean, median, midrange) and
// the blend coefficients q(p, N) and c(p, N).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "statflow/error.hpp"

namespace statflow {

/// The exponent p in [1, inf]. Infinity is stored as IEEE +inf and is a
/// distinguished value, never a large finite stand-in.
class Exponent {
 public:
  constexpr Exponent() = default;
  constexpr explicit Exponent(double p) : p_(p) {}
  static constexpr Exponent infinity() { return Exponent(std::numeric_limits<double>::infinity()); }

  [[nodiscard]] constexpr double value() const { return p_; }
  [[nodiscard]] bool is_infinite() const { return std::isinf(p_) && p_ > 0; }
  [[nodiscard]] bool valid() const { return !std::isnan(p_) && p_ >= 1.0; }

  [[nodiscard]] std::string to_string() const {
    if (is_infinite()) return "inf";
    std::string s = std::to_string(p_);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }
  static Exponent parse(const std::string& s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw UsageError("cannot parse exponent p from '" + s + "'");
    }
    if (used != s.size()) throw UsageError("cannot parse exponent p from '" + s + "'");
    return Exponent(v);
  }

  friend constexpr bool operator==(Exponent a, Exponent b) { return a.p_ == b.p_; }

 private:
  double p_ = 2.0;
};

struct SchemeParams {
  Exponent p;
  int dim = 2;
  double h = 0.0;

  void validate() const {
    detail::require(p.valid(), "exponent p must satisfy p >= 1");
    detail::require(dim >= 1, "dimension N must be >= 1");
    detail::require(std::isfinite(h) && h > 0.0, "step h must be positive and finite");
  }
  [[nodiscard]] double radius() const { return std::sqrt(2.0 * h); }
};

namespace detail {

/// The two branches of q(p, N), each defined on its own side of p = 2.
inline double q_low(double p, int N) { return N * (p - 1.0) / (N + p - 2.0); }
inline double q_high(double p, int N) { return N / (N + p - 2.0); }

}  // namespace detail

inline double blend_weight_q(Exponent p, int N) {
  detail::require(p.valid(), "blend_weight_q: p must satisfy p >= 1");
  detail::require(N >= 2, "blend_weight_q: N must be >= 2");
  if (p.is_infinite()) return 0.0;
  return p.value() <= 2.0 ? detail::q_low(p.value(), N) : detail::q_high(p.value(), N);
}

inline double diffusion_coefficient_c(Exponent p, int N) {
  detail::require(p.valid(), "diffusion_coefficient_c: p must satisfy p >= 1");
  detail::require(N >= 2, "diffusion_coefficient_c: N must be >= 2");
  if (p.is_infinite()) return 1.0;
  return p.value() / (N + p.value() - 2.0);
}

/// Convex weights on (median, mean, midrange) that make up one operator.
struct BlendWeights {
  double median = 0.0;
  double mean = 0.0;
  double midrange = 0.0;
};

enum class StatisticKind { Mean, Median, Midrange, Blend };

struct Statistic {
  StatisticKind kind = StatisticKind::Blend;
  Exponent p;

  static Statistic mean() { return {StatisticKind::Mean, Exponent(2.0)}; }
  static Statistic median() { return {StatisticKind::Median, Exponent(1.0)}; }
  static Statistic midrange() { return {StatisticKind::Midrange, Exponent::infinity()}; }
  static Statistic blend(Exponent p) { return {StatisticKind::Blend, p}; }
};

/// (1-q) median + q mean for p <= 2, (1-q) midrange + q mean for p >= 2.
inline BlendWeights blend_weights(Exponent p, int N) {
  const double q = blend_weight_q(p, N);
  BlendWeights w;
  w.mean = q;
  if (!p.is_infinite() && p.value() <= 2.0)
    w.median = 1.0 - q;
  else
    w.midrange = 1.0 - q;
  return w;
}

inline BlendWeights resolve(const Statistic& s, int N) {
  switch (s.kind) {
    case StatisticKind::Mean:
      return {0.0, 1.0, 0.0};
    case StatisticKind::Median:
      return {1.0, 0.0, 0.0};
    case StatisticKind::Midrange:
      return {0.0, 0.0, 1.0};
    case StatisticKind::Blend:
      break;
  }
  return blend_weights(s.p, N);
}

namespace detail {

/// Pairwise (tree) summation of w_i * v_i over [0, n).
inline double pairwise_dot(const double* v, const double* w, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * v[i];
    return s;
  }
  const std::size_t m = n / 2;
  return pairwise_dot(v, w, m) + pairwise_dot(v + m, w + m, n - m);
}

inline double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t m = n / 2;
  return pairwise_sum(v, m) + pairwise_sum(v + m, n - m);
}

/// Median of a non-empty scratch buffer, which is reordered. Same value a
/// full sort would give: the middle element, or the mean of the two middle
/// elements for even counts.
inline double median_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lo + hi) / 2.0;
}

inline double midrange_unchecked(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return (*lo + *hi) / 2.0;
}

inline void require_finite(std::span<const double> v, const char* who) {
  for (double x : v)
    if (!std::isfinite(x)) throw UsageError(std::string(who) + ": non-finite sample value");
}

}  // namespace detail

inline constexpr double kWeightSumTolerance = 1e-12;

inline double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  detail::require(!values.empty(), "weighted_mean: empty sample");
  detail::require(values.size() == weights.size(), "weighted_mean: values and weights differ in length");
  for (double w : weights) detail::require(w >= 0.0, "weighted_mean: negative weight");
  const double total = detail::pairwise_sum(weights.data(), weights.size());
  detail::require(std::abs(total - 1.0) <= kWeightSumTolerance, "weighted_mean: weights must sum to 1");
  detail::require_finite(values, "weighted_mean");
  return detail::pairwise_dot(values.data(), weights.data(), values.size());
}

inline double median(std::span<const double> values) {
  detail::require(!values.empty(), "median: empty sample");
  detail::require_finite(values, "median");
  std::vector<double> scratch(values.begin(), values.end());
  return detail::median_inplace(scratch);
}

inline double midrange(std::span<const double> values) {
  detail::require(!values.empty(), "midrange: empty sample");
  detail::require_finite(values, "midrange");
  return detail::midrange_unchecked(values);
}

}  // namespace statflow
