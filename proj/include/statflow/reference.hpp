#pragma once

// Analytic test functions with exact derivatives, the differential operators
// behind the consistency lemmas, exact solutions, and the consistency-slope
// harness.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "statflow/error.hpp"
#include "statflow/evolve.hpp"
#include "statflow/grid.hpp"
#include "statflow/statistics.hpp"
#include "statflow/vec.hpp"

namespace statflow {

/// An analytic field with exact gradient and Hessian, plus probe points where
/// the gradient is bounded away from zero and a box for random checks.
struct TestFunction {
  std::string name;
  AnalyticField field;
  std::vector<Vec> probes;
  Box box;
  int degree = -1;  // polynomial degree, -1 when not a polynomial

  [[nodiscard]] int dim() const { return field.dim; }
  [[nodiscard]] double value(const Vec& x) const { return field.value(x); }
  [[nodiscard]] Vec gradient(const Vec& x) const { return field.gradient(x); }
  [[nodiscard]] Mat hessian(const Vec& x) const { return field.hessian(x); }
};

namespace detail {

inline Vec first_n(int dim, std::initializer_list<double> xs) {
  Vec v(dim);
  int i = 0;
  for (double x : xs) {
    if (i == dim) break;
    v[i++] = x;
  }
  return v;
}

}  // namespace detail

namespace catalogue {

/// a.x + b
inline TestFunction affine(int dim) {
  const Vec a = detail::first_n(dim, {0.7, -0.4, 0.25});
  const double b = 0.3;
  TestFunction f;
  f.name = "affine";
  f.field = {dim, [a, b](const Vec& x) { return dot(a, x) + b; }, [a](const Vec&) { return a; },
             [dim](const Vec&) { return Mat(dim); }};
  f.probes = {detail::first_n(dim, {0.2, -0.1, 0.3})};
  f.box = Box::cube(dim, -1.0, 1.0);
  f.degree = 1;
  return f;
}

/// 1/2 x.Ax + b.x with symmetric A.
inline TestFunction quadratic_form(std::string name, const Mat& A, const Vec& b) {
  const int dim = A.dim();
  TestFunction f;
  f.name = std::move(name);
  f.field = {dim, [A, b](const Vec& x) { return 0.5 * A.quadratic(x) + dot(b, x); },
             [A, b](const Vec& x) { return A.apply(x) + b; }, [A](const Vec&) { return A; }};
  f.box = Box::cube(dim, -1.0, 1.0);
  f.degree = 2;
  return f;
}

/// |x|^2
inline TestFunction paraboloid(int dim) {
  Mat A(dim);
  for (int i = 0; i < dim; ++i) A(i, i) = 2.0;
  TestFunction f = quadratic_form("paraboloid", A, Vec(dim));
  f.probes = {detail::first_n(dim, {0.5, 0.25, -0.2})};
  return f;
}

/// x^2 - y^2 (plus 0 z^2 in 3-D)
inline TestFunction saddle(int dim) {
  Mat A(dim);
  A(0, 0) = 2.0;
  A(1, 1) = -2.0;
  TestFunction f = quadratic_form("saddle", A, Vec(dim));
  f.probes = {detail::first_n(dim, {1.0, 0.0, 0.0})};
  return f;
}

/// Full quadratic with mixed terms and a linear part.
inline TestFunction mixed_quadratic(int dim) {
  Mat A(dim);
  const double d[3] = {1.6, -0.6, 0.9};
  for (int i = 0; i < dim; ++i) A(i, i) = d[i];
  A(0, 1) = A(1, 0) = 0.7;
  if (dim == 3) {
    A(0, 2) = A(2, 0) = -0.3;
    A(1, 2) = A(2, 1) = 0.45;
  }
  TestFunction f = quadratic_form("mixed-quadratic", A, detail::first_n(dim, {0.5, -0.2, 0.3}));
  f.probes = {detail::first_n(dim, {0.3, 0.2, -0.1})};
  return f;
}

/// exp(-|x|^2 / (4a))
inline TestFunction gaussian(int dim, double a = 0.25) {
  detail::require(a > 0.0, "gaussian: a must be positive");
  TestFunction f;
  f.name = "gaussian";
  auto val = [a](const Vec& x) { return std::exp(-dot(x, x) / (4.0 * a)); };
  f.field = {dim, val, [a, val](const Vec& x) { return (-val(x) / (2.0 * a)) * x; },
             [a, val, dim](const Vec& x) {
               const double g = val(x);
               Mat H(dim);
               for (int i = 0; i < dim; ++i)
                 for (int j = 0; j < dim; ++j)
                   H(i, j) = g * (x[i] * x[j] / (4.0 * a * a) - (i == j ? 1.0 / (2.0 * a) : 0.0));
               return H;
             }};
  f.probes = {detail::first_n(dim, {0.3, 0.1, 0.2})};
  f.box = Box::cube(dim, -1.5, 1.5);
  return f;
}

/// sin(x) cos(y) [cos(z)]
inline TestFunction sin_cos(int dim) {
  TestFunction f;
  f.name = "sin-cos";
  // Factor k is sin for axis 0, cos otherwise; d is the derivative order.
  auto factor = [](int k, double t, int d) {
    if (k == 0) {
      const double v[4] = {std::sin(t), std::cos(t), -std::sin(t), -std::cos(t)};
      return v[d];
    }
    const double v[4] = {std::cos(t), -std::sin(t), -std::cos(t), std::sin(t)};
    return v[d];
  };
  auto partial = [dim, factor](const Vec& x, std::array<int, 3> order) {
    double p = 1.0;
    for (int k = 0; k < dim; ++k) p *= factor(k, x[k], order[k]);
    return p;
  };
  f.field = {dim, [partial](const Vec& x) { return partial(x, {0, 0, 0}); },
             [dim, partial](const Vec& x) {
               Vec g(dim);
               for (int i = 0; i < dim; ++i) {
                 std::array<int, 3> o{0, 0, 0};
                 o[i] = 1;
                 g[i] = partial(x, o);
               }
               return g;
             },
             [dim, partial](const Vec& x) {
               Mat H(dim);
               for (int i = 0; i < dim; ++i)
                 for (int j = 0; j < dim; ++j) {
                   std::array<int, 3> o{0, 0, 0};
                   ++o[i];
                   ++o[j];
                   H(i, j) = partial(x, o);
                 }
               return H;
             }};
  f.probes = {detail::first_n(dim, {0.4, 0.3, 0.2})};
  f.box = Box::cube(dim, -1.0, 1.0);
  return f;
}

/// |x| - R0
inline TestFunction distance(int dim, double R0 = 1.0) {
  TestFunction f;
  f.name = "distance";
  f.field = {dim, [R0](const Vec& x) { return norm(x) - R0; },
             [](const Vec& x) { return (1.0 / norm(x)) * x; },
             [dim](const Vec& x) {
               const double r = norm(x);
               Mat H(dim);
               for (int i = 0; i < dim; ++i)
                 for (int j = 0; j < dim; ++j) H(i, j) = ((i == j ? 1.0 : 0.0) - x[i] * x[j] / (r * r)) / r;
               return H;
             }};
  f.probes = {detail::first_n(dim, {0.5, 0.0, 0.0}), detail::first_n(dim, {0.3, 0.4, 0.2})};
  // Random checks stay away from the kink at the origin.
  f.box = Box{detail::first_n(dim, {0.2, 0.2, 0.2}), detail::first_n(dim, {1.0, 1.0, 1.0})};
  return f;
}

/// |x|^{4/3} - |y|^{4/3}: infinity-harmonic, only C^{1,1/3} across the axes.
inline TestFunction aronsson() {
  TestFunction f;
  f.name = "aronsson";
  auto pw = [](double t, double e) { return std::pow(std::abs(t), e); };
  auto sgn = [](double t) { return t < 0.0 ? -1.0 : 1.0; };
  f.field = {2, [pw](const Vec& x) { return pw(x[0], 4.0 / 3.0) - pw(x[1], 4.0 / 3.0); },
             [pw, sgn](const Vec& x) {
               return Vec{4.0 / 3.0 * sgn(x[0]) * pw(x[0], 1.0 / 3.0), -4.0 / 3.0 * sgn(x[1]) * pw(x[1], 1.0 / 3.0)};
             },
             [pw](const Vec& x) {
               Mat H(2);
               H(0, 0) = 4.0 / 9.0 * pw(x[0], -2.0 / 3.0);
               H(1, 1) = -4.0 / 9.0 * pw(x[1], -2.0 / 3.0);
               return H;
             }};
  f.probes = {Vec{0.6, 0.4}, Vec{0.5, -0.7}, Vec{-0.8, 0.3}, Vec{-0.45, -0.55}};
  f.box = Box{Vec{0.2, 0.2}, Vec{1.0, 1.0}};
  return f;
}

/// Smooth entries used by the derivative, identity and consistency checks.
inline std::vector<TestFunction> smooth(int dim) {
  return {affine(dim), paraboloid(dim), saddle(dim), mixed_quadratic(dim), gaussian(dim), sin_cos(dim),
          distance(dim)};
}

/// Every entry for the dimension (the Aronsson function is 2-D only).
inline std::vector<TestFunction> all(int dim) {
  auto v = smooth(dim);
  if (dim == 2) v.push_back(aronsson());
  return v;
}

}  // namespace catalogue

// ---------------------------------------------------------------------------
// Differential operators

enum class DifferentialKindTag { Laplacian, OnePLaplacian, Delta1, DeltaInf };

struct DifferentialKind {
  DifferentialKindTag tag = DifferentialKindTag::Laplacian;
  Exponent p;

  static DifferentialKind laplacian() { return {DifferentialKindTag::Laplacian, Exponent(2.0)}; }
  static DifferentialKind one_p_laplacian(Exponent p) { return {DifferentialKindTag::OnePLaplacian, p}; }
  static DifferentialKind delta1() { return {DifferentialKindTag::Delta1, Exponent(1.0)}; }
  static DifferentialKind delta_inf() { return {DifferentialKindTag::DeltaInf, Exponent::infinity()}; }
};

inline constexpr double kMinGradient = 1e-10;

namespace detail {

inline Vec checked_gradient(const TestFunction& f, const Vec& x) {
  detail::require(f.field.gradient && f.field.hessian, "test function has no exact derivatives");
  detail::require(x.dim() == f.dim(), "probe dimension does not match the test function");
  const Vec g = f.gradient(x);
  if (norm(g) <= kMinGradient)
    throw DomainError("gradient of '" + f.name + "' vanishes at x=" + to_string(x) +
                      "; choose a probe point with nonzero gradient");
  return g;
}

inline double delta_inf(const Mat& H, const Vec& g) { return H.quadratic(g) / dot(g, g); }

/// Trace of H restricted to the plane orthogonal to g (Gram-Schmidt on the
/// coordinate axes).
inline double tangential_trace(const Mat& H, const Vec& g) {
  const int dim = g.dim();
  std::vector<Vec> basis{(1.0 / norm(g)) * g};
  double tr = 0.0;
  for (int a = 0; a < dim && static_cast<int>(basis.size()) < dim; ++a) {
    Vec e(dim);
    e[a] = 1.0;
    for (const Vec& b : basis) e = e - dot(e, b) * b;
    const double n = norm(e);
    if (n < 1e-8) continue;
    e = (1.0 / n) * e;
    basis.push_back(e);
    tr += H.quadratic(e);
  }
  return tr;
}

}  // namespace detail

/// Delta, Delta_1, Delta_inf or the 1-homogeneous p-Laplacian
///   (1 - 1/p) Delta + (2/p - 1) Delta_1   (p <= 2)
///   (1/p) Delta + (1 - 2/p) Delta_inf     (p >= 2)
/// evaluated exactly from the gradient and Hessian. For p = 2 the singular
/// term has coefficient zero, so a vanishing gradient is allowed there.
inline double differential(const DifferentialKind& kind, const TestFunction& f, const Vec& x) {
  detail::require(f.field.hessian != nullptr, "test function has no exact Hessian");
  detail::require(x.dim() == f.dim(), "probe dimension does not match the test function");
  const Mat H = f.hessian(x);
  const double lap = H.trace();
  switch (kind.tag) {
    case DifferentialKindTag::Laplacian:
      return lap;
    case DifferentialKindTag::Delta1: {
      const Vec g = detail::checked_gradient(f, x);
      return lap - detail::delta_inf(H, g);
    }
    case DifferentialKindTag::DeltaInf:
      return detail::delta_inf(H, detail::checked_gradient(f, x));
    case DifferentialKindTag::OnePLaplacian:
      break;
  }
  const Exponent p = kind.p;
  detail::require(p.valid(), "p must satisfy p >= 1");
  if (!p.is_infinite() && p.value() == 2.0) return 0.5 * lap;
  const Vec g = detail::checked_gradient(f, x);
  const double dinf = detail::delta_inf(H, g);
  if (p.is_infinite()) return dinf;
  const double pv = p.value();
  if (pv < 2.0) return (1.0 - 1.0 / pv) * lap + (2.0 / pv - 1.0) * (lap - dinf);
  return (1.0 / pv) * lap + (1.0 - 2.0 / pv) * dinf;
}

/// Largest residual among
///   Delta_1 - (Delta - Delta_inf), with Delta_1 as the tangential trace,
///   |Du|^{p-2}[(p-1) Delta + (2-p) Delta_1] - |Du|^{p-2}[Delta + (p-2) Delta_inf],
///   the two branches of the 1-homogeneous p-Laplacian against each other,
/// over a grid of p values.
inline double identity_check_decompositions(const TestFunction& f, const Vec& x) {
  const Vec g = detail::checked_gradient(f, x);
  const Mat H = f.hessian(x);
  const double lap = H.trace();
  const double dinf = detail::delta_inf(H, g);
  const double d1 = detail::tangential_trace(H, g);
  const double gn = norm(g);
  double worst = std::abs(d1 - (lap - dinf));
  for (double p : {1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0}) {
    const double s = std::pow(gn, p - 2.0);
    const double lhs = s * ((p - 1.0) * lap + (2.0 - p) * d1);
    const double rhs = s * (lap + (p - 2.0) * dinf);
    worst = std::max(worst, std::abs(lhs - rhs));
    const double low = (1.0 - 1.0 / p) * lap + (2.0 / p - 1.0) * d1;
    const double high = (1.0 / p) * lap + (1.0 - 2.0 / p) * dinf;
    worst = std::max(worst, std::abs(low - high));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Exact solutions

/// Solution of u_t = (1/N) Delta u from exp(-|x|^2/(4a)).
inline double gaussian_heat_exact(const Vec& x, double t, double a, int N) {
  detail::require(a > 0.0, "gaussian_heat_exact: a must be positive");
  detail::require(t >= 0.0, "gaussian_heat_exact: t must be nonnegative");
  detail::require(N >= 1, "gaussian_heat_exact: N must be >= 1");
  const double s = a + t / N;
  return std::pow(a / s, N / 2.0) * std::exp(-dot(x, x) / (4.0 * s));
}

/// Radius of a sphere moving by dR/dt = -1/R; 0 at and after extinction.
inline double shrinking_sphere_radius(double R0, double t) {
  detail::require(R0 > 0.0 && t >= 0.0, "shrinking_sphere_radius: need R0 > 0 and t >= 0");
  const double r2 = R0 * R0 - 2.0 * t;
  return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

// ---------------------------------------------------------------------------
// Consistency harness

/// Geometric ladder h_k = h0 / 2^k, k = 0..count-1.
inline std::vector<double> halving_ladder(double h0, int count) {
  detail::require(h0 > 0.0 && count >= 2, "ladder needs h0 > 0 and at least 2 rungs");
  std::vector<double> hs(count);
  for (int k = 0; k < count; ++k) hs[k] = std::ldexp(h0, -k);
  return hs;
}

/// Default ladder 2^-6 .. 2^-13.
inline std::vector<double> default_ladder() { return halving_ladder(std::ldexp(1.0, -6), 8); }

/// Stencils for the harness: fine order-statistic sampling so that the
/// measured slopes reflect the operator rather than angular resolution.
inline StencilConfig consistency_stencils(int dim) {
  StencilConfig c;
  c.mean_samples = StencilConfig::default_samples(dim);
  c.order_samples = dim == 3 ? (1 << 20) : (1 << 14);
  return c;
}

struct ConsistencyReport {
  Exponent p;
  int dim = 2;
  std::string function;
  Vec x;
  std::vector<double> h;
  std::vector<double> slope;       // (phi(x) - M^h phi(x)) / h
  std::vector<double> richardson;  // 2 s(h/2) - s(h), one per adjacent pair
  double target = 0.0;             // -c(p,N) Delta^1_p phi(x)
  double extrapolated = 0.0;       // intercept of the least-squares fit s = s0 + a h
  double fit_rate = 0.0;           // a
  std::optional<double> observed_order;

  [[nodiscard]] double abs_error() const { return std::abs(extrapolated - target); }
  [[nodiscard]] double rel_error() const { return abs_error() / std::abs(target); }

  void write_csv(std::ostream& out) const {
    const auto old = out.precision(17);
    out << "h,slope,richardson\n";
    for (std::size_t k = 0; k < h.size(); ++k) {
      out << h[k] << ',' << slope[k] << ',';
      if (k >= 1) out << richardson[k - 1];
      out << '\n';
    }
    out.precision(old);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json xs = nlohmann::json::array();
    for (int a = 0; a < x.dim(); ++a) xs.push_back(x[a]);
    return {{"p", p.to_string()},
            {"N", dim},
            {"function", function},
            {"x", xs},
            {"h", h},
            {"slope", slope},
            {"richardson", richardson},
            {"target", target},
            {"extrapolated", extrapolated},
            {"fit_rate", fit_rate},
            {"observed_order", observed_order ? nlohmann::json(*observed_order) : nlohmann::json()}};
  }
};

namespace detail {

/// Least-squares line through (h_k, s_k): returns (intercept, rate).
inline std::pair<double, double> fit_line(const std::vector<double>& h, const std::vector<double>& s) {
  const double n = static_cast<double>(h.size());
  double mh = 0.0, ms = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    mh += h[k] / n;
    ms += s[k] / n;
  }
  double shh = 0.0, shs = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    shh += (h[k] - mh) * (h[k] - mh);
    shs += (h[k] - mh) * (s[k] - ms);
  }
  const double a = shs / shh;
  return {ms - a * mh, a};
}

/// Median of log2(|s_k - s_{k+1}| / |s_{k+1} - s_{k+2}|) over the ladder;
/// empty when the differences vanish (the slope is exact).
inline std::optional<double> observed_order(const std::vector<double>& s) {
  std::vector<double> orders;
  double scale = 0.0;
  for (double v : s) scale = std::max(scale, std::abs(v));
  const double floor = 1e-13 * std::max(scale, 1.0);
  for (std::size_t k = 0; k + 2 < s.size(); ++k) {
    const double d0 = std::abs(s[k] - s[k + 1]), d1 = std::abs(s[k + 1] - s[k + 2]);
    if (d0 > floor && d1 > floor) orders.push_back(std::log2(d0 / d1));
  }
  if (orders.empty()) return std::nullopt;
  std::sort(orders.begin(), orders.end());
  const std::size_t m = orders.size() / 2;
  return orders.size() % 2 ? orders[m] : 0.5 * (orders[m - 1] + orders[m]);
}

}  // namespace detail

inline ConsistencyReport consistency_slope(Exponent p, int N, const TestFunction& f, const Vec& x,
                                           const std::vector<double>& ladder, const StencilConfig& cfg) {
  detail::require(p.valid(), "p must satisfy p >= 1");
  detail::require(N == f.dim() && x.dim() == N, "dimension mismatch between N, function and probe");
  detail::require(N >= 2, "consistency harness needs N >= 2");
  detail::require(ladder.size() >= 2, "h-ladder needs at least 2 values");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    detail::require(std::isfinite(ladder[k]) && ladder[k] > 0.0, "h-ladder values must be positive");
    if (k) detail::require(ladder[k] < ladder[k - 1], "h-ladder must be strictly decreasing");
  }
  const bool p2 = !p.is_infinite() && p.value() == 2.0;
  if (!p2 && norm(f.gradient(x)) <= 1e-6)
    throw DomainError("gradient of '" + f.name + "' is too small at x=" + to_string(x) +
                      " for p != 2; choose another probe point");

  ConsistencyReport r;
  r.p = p;
  r.dim = N;
  r.function = f.name;
  r.x = x;
  r.h = ladder;
  r.target = -diffusion_coefficient_c(p, N) * differential(DifferentialKind::one_p_laplacian(p), f, x);
  const ScalarField field(f.field);
  const double phi = f.value(x);
  for (double h : ladder) {
    const OperatorStencils st = build_operator_stencils(N, h, cfg);
    const double m = apply_blend_at(field, x, SchemeParams{p, N, h}, st);
    r.slope.push_back((phi - m) / h);
  }
  for (std::size_t k = 0; k + 1 < r.slope.size(); ++k) {
    const double ratio = ladder[k] / ladder[k + 1];
    r.richardson.push_back((ratio * r.slope[k + 1] - r.slope[k]) / (ratio - 1.0));
  }
  std::tie(r.extrapolated, r.fit_rate) = detail::fit_line(r.h, r.slope);
  r.observed_order = detail::observed_order(r.slope);
  for (double v : r.slope)
    if (!std::isfinite(v)) throw InternalError("non-finite consistency slope for '" + f.name + "'");
  return r;
}

}  // namespace statflow
