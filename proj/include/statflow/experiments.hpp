#pragma once

// Experiment configurations and drivers shared by the command-line runner and
// the acceptance suite. A driver validates its configuration before any
// compute and returns a JSON summary, CSV tables, result grids and a pass
// flag with a list of failed checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "statflow/error.hpp"
#include "statflow/evolve.hpp"
#include "statflow/grid.hpp"
#include "statflow/reference.hpp"
#include "statflow/statistics.hpp"

namespace statflow::experiments {

using nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

// ---------------------------------------------------------------------------
// JSON plumbing

namespace detail {

template <class T>
json encode(const T& v) {
  return v;
}
inline json encode(const Exponent& p) { return p.is_infinite() ? json("inf") : json(p.value()); }
inline json encode(const std::vector<Exponent>& ps) {
  json j = json::array();
  for (const Exponent& p : ps) j.push_back(encode(p));
  return j;
}

template <class T>
void decode(const json& j, T& v) {
  v = j.get<T>();
}
inline void decode(const json& j, Exponent& p) {
  p = j.is_string() ? Exponent::parse(j.get<std::string>()) : Exponent(j.get<double>());
}
inline void decode(const json& j, std::vector<Exponent>& ps) {
  statflow::detail::require(j.is_array(), "expected an array of exponents");
  ps.clear();
  for (const json& e : j) {
    Exponent p;
    decode(e, p);
    ps.push_back(p);
  }
}

}  // namespace detail

/// Every config type lists its fields once in a static fields(self, f);
/// serialization, parsing and unknown-key rejection all go through it.
template <class C>
json to_json(const C& c) {
  json j = json::object();
  C::fields(c, [&](const char* key, const auto& v) { j[key] = detail::encode(v); });
  return j;
}

template <class C>
C from_json(const json& j) {
  statflow::detail::require(j.is_object(), "experiment parameters must be a JSON object");
  C c;
  std::set<std::string> known;
  C::fields(c, [&](const char* key, auto&) { known.insert(key); });
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw UsageError("unknown parameter '" + key + "'");
  C::fields(c, [&](const char* key, auto& v) {
    if (!j.contains(key)) return;
    try {
      detail::decode(j.at(key), v);
    } catch (const json::exception& e) {
      throw UsageError(std::string("parameter '") + key + "': " + e.what());
    }
  });
  c.validate();
  return c;
}

namespace detail {

inline void require(bool ok, const std::string& what) { statflow::detail::require(ok, what); }

inline Interpolation parse_interpolation(const std::string& s) {
  if (s == "linear") return Interpolation::Linear;
  if (s == "cubic") return Interpolation::Cubic;
  throw UsageError("interpolation must be 'linear' or 'cubic', got '" + s + "'");
}

inline bool is_doubling(const std::vector<int>& n) {
  for (std::size_t k = 1; k < n.size(); ++k)
    if (n[k] != 2 * n[k - 1]) return false;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Configurations. Defaults are the acceptance settings.

/// Coefficient identities for q and c, decomposition identities for the
/// differential operators.
struct IdentitiesConfig {
  std::vector<int> coefficient_dims{2, 3, 4, 5, 10};
  std::vector<int> dims{2, 3};
  int random_points = 10;
  double coefficient_tol = 1e-15;
  double decomposition_tol = 1e-10;

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("coefficient_dims", c.coefficient_dims);
    f("dims", c.dims);
    f("random_points", c.random_points);
    f("coefficient_tol", c.coefficient_tol);
    f("decomposition_tol", c.decomposition_tol);
  }
  void validate() const {
    for (int n : coefficient_dims) detail::require(n >= 2, "coefficient_dims entries must be >= 2");
    for (int n : dims) detail::require(n == 2 || n == 3, "dims entries must be 2 or 3");
    detail::require(random_points >= 0, "random_points must be >= 0");
    detail::require(coefficient_tol > 0 && decomposition_tol > 0, "tolerances must be positive");
  }
};

struct ConsistencyConfig {
  std::vector<Exponent> p{Exponent(1.0), Exponent(1.5), Exponent(2.0), Exponent(4.0), Exponent::infinity()};
  std::vector<int> dims{2, 3};
  double h0 = 1.0 / 64.0;
  int rungs = 8;
  int mean_samples = 0;
  int order_samples_2d = 1 << 14;
  int order_samples_3d = 1 << 20;
  double rel_tol = 0.01;
  double exact_tol = 1e-12;
  double affine_tol = 1e-10;
  double min_target = 0.05;  // smaller targets make a relative check meaningless
  double min_order = 0.8;

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("p", c.p);
    f("dims", c.dims);
    f("h0", c.h0);
    f("rungs", c.rungs);
    f("mean_samples", c.mean_samples);
    f("order_samples_2d", c.order_samples_2d);
    f("order_samples_3d", c.order_samples_3d);
    f("rel_tol", c.rel_tol);
    f("exact_tol", c.exact_tol);
    f("affine_tol", c.affine_tol);
    f("min_target", c.min_target);
    f("min_order", c.min_order);
  }
  void validate() const {
    detail::require(!p.empty(), "p list is empty");
    for (const Exponent& e : p) detail::require(e.valid(), "every p must satisfy p >= 1");
    for (int n : dims) detail::require(n == 2 || n == 3, "dims entries must be 2 or 3");
    detail::require(h0 > 0.0 && rungs >= 3, "need h0 > 0 and at least 3 rungs");
    detail::require(mean_samples >= 0 && order_samples_2d >= 2 && order_samples_3d >= 2,
                    "sample counts must be positive");
  }
};

/// Free-space run from exp(-|x|^2/(4a)); compared with the exact heat
/// solution when p = 2.
struct EvolveConfig {
  int dim = 2;
  Exponent p{2.0};
  double a = 0.25;
  double t = 0.5;
  int cells = 256;
  double half_width = 3.0;
  double region_half_width = 1.5;
  std::vector<int> steps{32, 64, 128};
  int samples = 64;
  std::string interpolation = "cubic";
  double max_error = 5e-2;
  double gap_ratio = 0.5;
  double gap_ratio_tol = 0.3;

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("dim", c.dim);
    f("p", c.p);
    f("a", c.a);
    f("t", c.t);
    f("cells", c.cells);
    f("half_width", c.half_width);
    f("region_half_width", c.region_half_width);
    f("steps", c.steps);
    f("samples", c.samples);
    f("interpolation", c.interpolation);
    f("max_error", c.max_error);
    f("gap_ratio", c.gap_ratio);
    f("gap_ratio_tol", c.gap_ratio_tol);
  }
  void validate() const {
    detail::require(dim >= 1 && dim <= 3, "dim must be 1, 2 or 3");
    detail::require(p.valid(), "p must satisfy p >= 1");
    detail::require(a > 0.0 && t > 0.0, "a and t must be positive");
    detail::require(cells >= 4 && half_width > 0.0, "grid needs >= 4 cells and a positive half width");
    detail::require(region_half_width > 0.0 && region_half_width <= half_width,
                    "region_half_width must lie in (0, half_width]");
    detail::require(!steps.empty() && steps.front() >= 1, "steps must be a nonempty list of positive counts");
    detail::require(detail::is_doubling(steps), "steps must double from one entry to the next");
    detail::require(samples >= 2, "samples must be >= 2");
    detail::parse_interpolation(interpolation);
  }
};

/// Level-set front from |x| - R0 under p = 1, optionally with the Catte
/// operator alongside.
struct McfConfig {
  int dim = 2;
  double R0 = 1.0;
  double t = 0.3;
  int cells = 256;
  double half_width = 1.5;
  int steps = 128;
  int order_samples = 0;
  double rel_tol = 0.05;
  int catte_directions = 0;  // 0 disables the Catte cross-check
  int catte_segment_samples = 17;
  double catte_rel_tol = 0.10;

  static McfConfig sphere_3d() {
    McfConfig c;
    c.dim = 3;
    c.cells = 96;
    c.half_width = 1.25;
    c.steps = 32;
    c.rel_tol = 0.08;
    return c;
  }

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("dim", c.dim);
    f("R0", c.R0);
    f("t", c.t);
    f("cells", c.cells);
    f("half_width", c.half_width);
    f("steps", c.steps);
    f("order_samples", c.order_samples);
    f("rel_tol", c.rel_tol);
    f("catte_directions", c.catte_directions);
    f("catte_segment_samples", c.catte_segment_samples);
    f("catte_rel_tol", c.catte_rel_tol);
  }
  void validate() const {
    detail::require(dim == 2 || dim == 3, "mcf needs dim 2 or 3");
    detail::require(R0 > 0.0 && R0 < half_width, "R0 must be positive and inside the grid");
    detail::require(t > 0.0 && t < R0 * R0 / 2.0, "t must lie in (0, R0^2/2) so the front survives");
    detail::require(cells >= 4 && steps >= 1, "need cells >= 4 and steps >= 1");
    detail::require(order_samples >= 0, "order_samples must be >= 0");
    detail::require(catte_directions == 0 || dim == 2, "the Catte cross-check is 2-D only");
  }
};

/// p = 1 from the bump (R^2 - |x|^2)_+ past its extinction time R^2/2.
struct ExtinctionConfig {
  int cells = 128;
  double half_width = 1.0;
  double bump_radius = 0.5;
  double t = 0.2;
  int steps = 64;
  int order_samples = 0;
  double threshold = 1e-3;

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("cells", c.cells);
    f("half_width", c.half_width);
    f("bump_radius", c.bump_radius);
    f("t", c.t);
    f("steps", c.steps);
    f("order_samples", c.order_samples);
    f("threshold", c.threshold);
  }
  void validate() const {
    detail::require(cells >= 4 && steps >= 1, "need cells >= 4 and steps >= 1");
    detail::require(bump_radius > 0.0 && bump_radius < half_width, "bump must fit in the grid");
    detail::require(t > 0.0 && threshold > 0.0, "t and threshold must be positive");
  }
};

/// One step from the bump (R^2 - |x|^2)_+; the eps-support should grow by
/// sqrt(2h).
struct SupportConfig {
  int dim = 2;
  Exponent p{2.0};
  int cells = 256;
  double half_width = 1.0;
  double bump_radius = 0.5;
  double h = 0.01;
  double eps = 1e-12;
  int samples = 0;
  double slack_fraction = 0.02;

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("dim", c.dim);
    f("p", c.p);
    f("cells", c.cells);
    f("half_width", c.half_width);
    f("bump_radius", c.bump_radius);
    f("h", c.h);
    f("eps", c.eps);
    f("samples", c.samples);
    f("slack_fraction", c.slack_fraction);
  }
  void validate() const {
    detail::require(dim >= 1 && dim <= 3, "dim must be 1, 2 or 3");
    detail::require(p.valid(), "p must satisfy p >= 1");
    detail::require(cells >= 4 && h > 0.0 && eps > 0.0, "need cells >= 4, h > 0, eps > 0");
    detail::require(bump_radius + std::sqrt(2.0 * h) < half_width, "grown support must stay inside the grid");
  }
};

/// Iterate the Dirichlet operator on a ball with data x^2 - y^2 until the
/// step residual is small.
struct DirichletConfig {
  Exponent p{2.0};
  int cells = 128;
  double half_width = 1.1;
  double radius = 1.0;
  double h = 0.01;
  double band_cells = 0.5;
  int samples = 0;
  double residual_tol = 1e-6;
  int max_steps = 20000;
  double max_error = 2e-2;

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("p", c.p);
    f("cells", c.cells);
    f("half_width", c.half_width);
    f("radius", c.radius);
    f("h", c.h);
    f("band_cells", c.band_cells);
    f("samples", c.samples);
    f("residual_tol", c.residual_tol);
    f("max_steps", c.max_steps);
    f("max_error", c.max_error);
  }
  void validate() const {
    detail::require(p.valid(), "p must satisfy p >= 1");
    detail::require(cells >= 4 && radius > 0.0 && radius < half_width, "disk must fit inside the grid");
    detail::require(h > 0.0 && band_cells > 0.0, "h and band_cells must be positive");
    detail::require(residual_tol > 0.0 && max_steps >= 1, "need residual_tol > 0 and max_steps >= 1");
  }
};

/// One midrange step on |x|^{4/3} - |y|^{4/3} at probes away from the axes.
struct AronssonConfig {
  std::vector<double> h{1e-2, 5e-3, 2.5e-3};
  int order_samples = 0;
  double coefficient = 5.0;
  double exponent = 1.2;

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("h", c.h);
    f("order_samples", c.order_samples);
    f("coefficient", c.coefficient);
    f("exponent", c.exponent);
  }
  void validate() const {
    detail::require(!h.empty(), "h list is empty");
    for (double v : h) detail::require(v > 0.0 && v < 0.02, "h values must lie in (0, 0.02) to avoid the axes");
    detail::require(order_samples >= 0 && coefficient > 0.0, "bad order_samples or coefficient");
  }
};

/// Randomized operator properties.
struct AxiomsConfig {
  int trials = 100;
  double tol = 1e-12;
  int cells_2d = 24;
  int cells_3d = 10;
  std::vector<Exponent> p{Exponent(1.0), Exponent(1.5), Exponent(2.0), Exponent(3.0), Exponent::infinity()};

  template <class S, class F>
  static void fields(S& c, F&& f) {
    f("trials", c.trials);
    f("tol", c.tol);
    f("cells_2d", c.cells_2d);
    f("cells_3d", c.cells_3d);
    f("p", c.p);
  }
  void validate() const {
    detail::require(trials >= 1 && tol >= 0.0, "need trials >= 1 and tol >= 0");
    detail::require(cells_2d >= 8 && cells_3d >= 8, "axiom grids need >= 8 cells per axis");
    detail::require(!p.empty(), "p list is empty");
    for (const Exponent& e : p) detail::require(e.valid(), "every p must satisfy p >= 1");
  }
};

// ---------------------------------------------------------------------------
// Results

/// A CSV table with a header row; cells are quoted when needed.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  template <class... T>
  void add(const T&... cells) {
    rows.push_back({cell(cells)...});
  }

  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  void write_csv(std::ostream& out) const {
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << quote(r[k]);
      out << "\r\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
};

struct ExperimentResult {
  bool pass = true;
  std::vector<std::string> failures;
  json summary = json::object();
  std::vector<Table> tables;
  std::vector<std::pair<std::string, GridField>> grids;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    failures.push_back(what);
  }
};

struct RunContext {
  std::uint64_t seed = 42;
  int workers = 1;
  std::vector<int> snapshots;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline StepOptions step_options(const RunContext& ctx, int mean_samples, int order_samples) {
  StepOptions o;
  o.workers = ctx.workers;
  o.stencils.mean_samples = mean_samples;
  o.stencils.order_samples = order_samples;
  return o;
}

inline GridField bump(const GridSpec& spec, double R) {
  return GridField::from_function(spec, [R](const Vec& x) { return std::max(0.0, R * R - dot(x, x)); });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Drivers

/// q and c at p = 1, 2, inf and agreement of the two q branches at p = 2.
inline void coefficient_identities(const IdentitiesConfig& c, ExperimentResult& r) {
  Table coef{"coefficients", {"N", "p", "q", "c", "expected_q", "expected_c"}, {}};
  double worst = 0.0;
  for (int N : c.coefficient_dims) {
    struct Row {
      Exponent p;
      double q, c;
    };
    const Row expected[] = {{Exponent(1.0), 0.0, 1.0 / (N - 1)},
                            {Exponent(2.0), 1.0, 2.0 / N},
                            {Exponent::infinity(), 0.0, 1.0}};
    for (const Row& e : expected) {
      const double q = blend_weight_q(e.p, N), cc = diffusion_coefficient_c(e.p, N);
      coef.add(N, e.p.to_string(), q, cc, e.q, e.c);
      worst = std::max({worst, std::abs(q - e.q), std::abs(cc - e.c)});
      r.check(q == e.q, "q(" + e.p.to_string() + "," + std::to_string(N) + ") = " + detail::fmt(q));
      r.check(std::abs(cc - e.c) <= c.coefficient_tol,
              "c(" + e.p.to_string() + "," + std::to_string(N) + ") = " + detail::fmt(cc));
    }
    const double branch_gap = std::abs(statflow::detail::q_low(2.0, N) - statflow::detail::q_high(2.0, N));
    worst = std::max(worst, branch_gap);
    r.check(branch_gap <= c.coefficient_tol, "q branches disagree at p=2 for N=" + std::to_string(N));
  }
  r.summary["max_coefficient_error"] = worst;
  r.tables.push_back(coef);
}

/// Decomposition residuals over the catalogue at probes and random points.
inline void decomposition_identities(const IdentitiesConfig& c, const RunContext& ctx, ExperimentResult& r) {
  Table dec{"decompositions", {"N", "function", "x", "residual"}, {}};
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  for (int N : c.dims) {
    for (const TestFunction& f : catalogue::all(N)) {
      std::vector<Vec> points = f.probes;
      for (int k = 0; k < c.random_points; ++k) {
        Vec x(N);
        for (int a = 0; a < N; ++a) x[a] = std::uniform_real_distribution<double>(f.box.lo[a], f.box.hi[a])(rng);
        points.push_back(x);
      }
      for (const Vec& x : points) {
        if (norm(f.gradient(x)) <= kMinGradient) continue;
        const double res = identity_check_decompositions(f, x);
        dec.add(N, f.name, to_string(x), res);
        worst = std::max(worst, res);
        r.check(res < c.decomposition_tol,
                "decomposition residual " + detail::fmt(res) + " for " + f.name + " at " + to_string(x));
      }
    }
  }
  r.summary["max_decomposition_residual"] = worst;
  r.tables.push_back(dec);
}

inline ExperimentResult run_identities(const IdentitiesConfig& c, const RunContext& ctx) {
  c.validate();
  ExperimentResult r;
  coefficient_identities(c, r);
  decomposition_identities(c, ctx, r);
  return r;
}

inline ExperimentResult run_consistency(const ConsistencyConfig& c, const RunContext&) {
  c.validate();
  ExperimentResult r;
  Table t{"consistency", {"p", "N", "function", "h", "slope", "richardson", "target"}, {}};
  json cases = json::array();
  const std::vector<double> ladder = halving_ladder(c.h0, c.rungs);

  for (int N : c.dims) {
    StencilConfig sc;
    sc.mean_samples = c.mean_samples;
    sc.order_samples = N == 3 ? c.order_samples_3d : c.order_samples_2d;
    const std::vector<TestFunction> fns{catalogue::affine(N), catalogue::paraboloid(N),
                                        catalogue::mixed_quadratic(N), catalogue::gaussian(N),
                                        catalogue::sin_cos(N), catalogue::distance(N)};
    for (const Exponent& p : c.p) {
      const bool p2 = !p.is_infinite() && p.value() == 2.0;
      for (const TestFunction& f : fns) {
        if (f.name == "paraboloid" && !p2) continue;  // gradient-free probe is for p = 2 only
        const Vec x = f.name == "paraboloid" ? Vec(N) : f.probes.front();
        const ConsistencyReport rep = consistency_slope(p, N, f, x, ladder, sc);
        for (std::size_t k = 0; k < rep.h.size(); ++k)
          t.add(p.to_string(), N, f.name, rep.h[k], rep.slope[k], k ? Table::cell(rep.richardson[k - 1]) : std::string(),
                rep.target);
        json js = rep.to_json();
        const std::string tag = "p=" + p.to_string() + " N=" + std::to_string(N) + " " + f.name;

        if (f.degree == 1) {
          double worst = 0.0;
          for (double s : rep.slope) worst = std::max(worst, std::abs(s));
          js["check"] = "slope zero at every h";
          js["max_abs_slope"] = worst;
          r.check(worst <= c.affine_tol, tag + ": affine slope " + detail::fmt(worst));
        } else if (f.name == "paraboloid") {
          double worst = 0.0;
          for (double s : rep.slope) worst = std::max(worst, std::abs(s - rep.target));
          js["check"] = "exact at every h";
          js["max_abs_error"] = worst;
          r.check(worst <= c.exact_tol, tag + ": quadratic slope off by " + detail::fmt(worst));
        } else if (std::abs(rep.target) < c.min_target) {
          js["check"] = "skipped";
          js["reason"] = "|target| = " + detail::fmt(std::abs(rep.target)) + " is below min_target " +
                         detail::fmt(c.min_target) + "; a relative tolerance is not meaningful";
          js["abs_error"] = rep.abs_error();
        } else {
          js["check"] = "extrapolated slope within rel_tol";
          js["rel_error"] = rep.rel_error();
          r.check(rep.rel_error() <= c.rel_tol, tag + ": extrapolated slope " + detail::fmt(rep.extrapolated) +
                                                    " vs target " + detail::fmt(rep.target));
          if (p2 && f.degree < 0) {
            js["order_checked"] = true;
            r.check(rep.observed_order && *rep.observed_order >= c.min_order,
                    tag + ": observed order " +
                        (rep.observed_order ? detail::fmt(*rep.observed_order) : std::string("undefined")));
          }
        }
        cases.push_back(js);
      }
    }
  }
  r.summary = {{"cases", cases}};
  r.tables = {t};
  return r;
}

inline ExperimentResult run_evolve(const EvolveConfig& c, const RunContext& ctx) {
  c.validate();
  ExperimentResult r;
  const Interpolation interp = detail::parse_interpolation(c.interpolation);
  const GridSpec spec = GridSpec::cube(c.dim, c.cells, -c.half_width, c.half_width);
  const double a = c.a;
  const GridField u0 = GridField::from_function(
      spec, [a](const Vec& x) { return std::exp(-dot(x, x) / (4.0 * a)); }, ExtensionPolicy::clamp(), interp);
  const Box region = Box::cube(c.dim, -c.region_half_width, c.region_half_width);
  const bool exact = !c.p.is_infinite() && c.p.value() == 2.0;
  const AnalyticField reference{c.dim, [a, t = c.t, N = c.dim](const Vec& x) { return gaussian_heat_exact(x, t, a, N); }, {}, {}};

  EvolveOptions opt;
  opt.step = detail::step_options(ctx, c.samples, c.samples);
  opt.snapshots = ctx.snapshots;

  Table t{"evolve", {"n", "h", "sup_error", "cauchy_gap", "seconds"}, {}};
  std::vector<double> errors, gaps;
  GridField prev;
  for (std::size_t k = 0; k < c.steps.size(); ++k) {
    const int n = c.steps[k];
    const EvolutionRun run = evolve(u0, c.p, c.t, n, FreeSpace{}, opt);
    const double err = exact ? linf_distance(run.result, ScalarField(reference), region) : std::nan("");
    if (exact) errors.push_back(err);
    double gap = std::nan("");
    if (k) {
      gap = linf_distance(prev, run.result, region);
      gaps.push_back(gap);
    }
    t.add(n, c.t / n, exact ? Table::cell(err) : std::string(), k ? Table::cell(gap) : std::string(), run.seconds);
    for (std::size_t s = 1; s < run.sup_abs.size(); ++s)
      r.check(run.sup_abs[s] <= run.sup_abs[s - 1] + 1e-12,
              "n=" + std::to_string(n) + ": sup|u| grew at step " + std::to_string(s));
    for (const auto& [step, g] : run.snapshots) r.grids.emplace_back("n" + std::to_string(n) + "_step" + std::to_string(step), g);
    r.grids.emplace_back("n" + std::to_string(n), run.result);
    prev = run.result;
  }
  json js = {{"errors", errors}, {"gaps", gaps}, {"exact_reference", exact}};
  if (exact) {
    r.check(errors.back() <= c.max_error, "sup error " + detail::fmt(errors.back()) + " at n=" +
                                               std::to_string(c.steps.back()) + " exceeds " + detail::fmt(c.max_error));
    for (std::size_t k = 1; k < errors.size(); ++k)
      r.check(errors[k] < errors[k - 1], "sup error not strictly decreasing at n=" + std::to_string(c.steps[k]));
  }
  json ratios = json::array();
  for (std::size_t k = 1; k < gaps.size(); ++k) {
    const double ratio = gaps[k] / gaps[k - 1];
    ratios.push_back(ratio);
    r.check(std::abs(ratio - c.gap_ratio) <= c.gap_ratio_tol * c.gap_ratio,
            "cauchy gap ratio " + detail::fmt(ratio) + " outside " + detail::fmt(c.gap_ratio) + " +/- " +
                detail::fmt(100 * c.gap_ratio_tol) + "%");
  }
  js["gap_ratios"] = ratios;
  r.summary = js;
  r.tables = {t};
  return r;
}

inline ExperimentResult run_mcf(const McfConfig& c, const RunContext& ctx) {
  c.validate();
  ExperimentResult r;
  const GridSpec spec = GridSpec::cube(c.dim, c.cells, -c.half_width, c.half_width);
  const double R0 = c.R0;
  const GridField u0 = GridField::from_function(spec, [R0](const Vec& x) { return norm(x) - R0; });
  EvolveOptions opt;
  opt.step = detail::step_options(ctx, 0, c.order_samples);
  opt.snapshots = ctx.snapshots;
  const EvolutionRun run = evolve(u0, Exponent(1.0), c.t, c.steps, FreeSpace{}, opt);

  Table trace{"radius", {"step", "t", "radius", "exact"}, {}};
  trace.add(0, 0.0, R0, R0);
  for (const auto& [step, g] : run.snapshots) {
    const double ts = c.t * step / c.steps;
    trace.add(step, ts, extract_zero_level_radius(g), shrinking_sphere_radius(R0, ts));
    r.grids.emplace_back("step" + std::to_string(step), g);
  }
  const double radius = extract_zero_level_radius(run.result);
  const double exact = shrinking_sphere_radius(R0, c.t);
  trace.add(c.steps, c.t, radius, exact);
  r.grids.emplace_back("median", run.result);
  const double rel = std::abs(radius - exact) / exact;
  r.check(rel <= c.rel_tol, "median radius " + detail::fmt(radius) + " is " + detail::fmt(100 * rel) +
                                "% from " + detail::fmt(exact));
  json js = {{"radius", radius}, {"exact", exact}, {"rel_error", rel}, {"seconds", run.seconds}};

  if (c.catte_directions > 0) {
    CatteOptions co;
    co.directions = c.catte_directions;
    co.segment_samples = c.catte_segment_samples;
    co.workers = ctx.workers;
    const GridField cu = catte_evolve(u0, c.t, c.steps, co);
    const double cr = extract_zero_level_radius(cu);
    const double crel = std::abs(cr - radius) / radius;
    js["catte"] = {{"radius", cr}, {"rel_to_median", crel}, {"rel_to_exact", std::abs(cr - exact) / exact},
                   {"directions", c.catte_directions}};
    r.grids.emplace_back("catte", cu);
    r.check(crel <= c.catte_rel_tol, "Catte radius " + detail::fmt(cr) + " is " + detail::fmt(100 * crel) +
                                         "% from the median radius " + detail::fmt(radius));
  }
  r.summary = js;
  r.tables = {trace};
  return r;
}

inline ExperimentResult run_extinction(const ExtinctionConfig& c, const RunContext& ctx) {
  c.validate();
  ExperimentResult r;
  const GridSpec spec = GridSpec::cube(2, c.cells, -c.half_width, c.half_width);
  GridField u = detail::bump(spec, c.bump_radius);
  const SchemeParams params{Exponent(1.0), 2, c.t / c.steps};
  const Stepper stepper(spec, Interpolation::Linear, params, FreeSpace{}, detail::step_options(ctx, 0, c.order_samples));
  auto positive_sup = [](const GridField& g) { return std::max(0.0, g.max_value()); };
  Table t{"extinction", {"step", "t", "sup_positive"}, {}};
  double prev = positive_sup(u);
  t.add(0, 0.0, prev);
  int increases = 0;
  std::set<int> keep(ctx.snapshots.begin(), ctx.snapshots.end());
  for (int k = 1; k <= c.steps; ++k) {
    u = stepper.apply(u);
    const double s = positive_sup(u);
    t.add(k, params.h * k, s);
    if (s > prev) ++increases;
    prev = s;
    if (keep.count(k)) r.grids.emplace_back("step" + std::to_string(k), u);
  }
  r.grids.emplace_back("final", u);
  r.check(increases == 0, std::to_string(increases) + " steps increased the positive sup");
  r.check(prev < c.threshold, "positive sup " + detail::fmt(prev) + " at t=" + detail::fmt(c.t) +
                                  " is not below " + detail::fmt(c.threshold));
  r.summary = {{"final_sup_positive", prev},
               {"increases", increases},
               {"extinction_time_continuum", c.bump_radius * c.bump_radius / 2.0}};
  r.tables = {t};
  return r;
}

inline ExperimentResult run_support(const SupportConfig& c, const RunContext& ctx) {
  c.validate();
  ExperimentResult r;
  const GridSpec spec = GridSpec::cube(c.dim, c.cells, -c.half_width, c.half_width);
  const GridField u0 = detail::bump(spec, c.bump_radius);
  const GridField u1 = step(u0, SchemeParams{c.p, c.dim, c.h}, FreeSpace{}, detail::step_options(ctx, c.samples, c.samples));
  const double before = measure_support_radius(u0, c.eps);
  const double after = measure_support_radius(u1, c.eps);
  const double growth = after - before, expected = std::sqrt(2.0 * c.h);
  const double allowed = spec.spacing + c.slack_fraction * expected;
  Table t{"support", {"h", "radius_before", "radius_after", "growth", "expected", "allowed_deviation"}, {}};
  t.add(c.h, before, after, growth, expected, allowed);
  r.check(std::abs(growth - expected) <= allowed, "support grew by " + detail::fmt(growth) + ", expected " +
                                                      detail::fmt(expected) + " +/- " + detail::fmt(allowed));
  r.summary = {{"radius_before", before}, {"radius_after", after}, {"growth", growth}, {"expected", expected},
               {"allowed_deviation", allowed}};
  r.grids = {{"before", u0}, {"after", u1}};
  r.tables = {t};
  return r;
}

inline ExperimentResult run_dirichlet(const DirichletConfig& c, const RunContext& ctx) {
  c.validate();
  ExperimentResult r;
  const GridSpec spec = GridSpec::cube(2, c.cells, -c.half_width, c.half_width);
  DirichletProblem problem{Domain::ball(Vec(2), c.radius), c.band_cells};
  const auto classes = problem.classify(spec);
  auto g = [](const Vec& x) { return x[0] * x[0] - x[1] * x[1]; };
  std::vector<double> v(spec.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = classes[i] == NodeClass::Interior ? 0.0 : g(spec.node(i));
  GridField u(spec, std::move(v));
  const Stepper stepper(spec, Interpolation::Linear, SchemeParams{c.p, 2, c.h}, problem,
                        detail::step_options(ctx, c.samples, c.samples));

  Table t{"dirichlet", {"step", "residual"}, {}};
  double residual = std::numeric_limits<double>::infinity();
  int k = 0;
  while (residual >= c.residual_tol && k < c.max_steps) {
    GridField next = stepper.apply(u);
    residual = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) residual = std::max(residual, std::abs(next[i] - u[i]));
    u = std::move(next);
    ++k;
    if (k % 10 == 0 || residual < c.residual_tol) t.add(k, residual);
  }
  r.check(residual < c.residual_tol, "residual " + detail::fmt(residual) + " after " + std::to_string(k) + " steps");
  json js = {{"steps", k}, {"residual", residual}, {"distinct_radii", stepper.distinct_radii()}};

  std::vector<double> err(spec.size(), 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (classes[i] != NodeClass::Interior) continue;
    err[i] = u[i] - g(spec.node(i));
    worst = std::max(worst, std::abs(err[i]));
  }
  if (!c.p.is_infinite() && c.p.value() == 2.0) {
    js["interior_sup_error"] = worst;
    r.check(worst <= c.max_error, "interior sup error " + detail::fmt(worst) + " exceeds " + detail::fmt(c.max_error));
    r.grids.emplace_back("error", GridField(spec, err));
  } else {
    js["deviation_from_harmonic"] = worst;
  }
  r.grids.emplace_back("solution", u);
  r.summary = js;
  r.tables = {t};
  return r;
}

inline ExperimentResult run_aronsson(const AronssonConfig& c, const RunContext&) {
  c.validate();
  ExperimentResult r;
  const TestFunction f = catalogue::aronsson();
  const ScalarField field(f.field);
  StencilConfig sc;
  sc.order_samples = c.order_samples;
  Table t{"aronsson", {"h", "x", "change", "bound"}, {}};
  double worst_ratio = 0.0;
  for (double h : c.h) {
    const OperatorStencils st = build_operator_stencils(2, h, sc);
    const double bound = c.coefficient * std::pow(h, c.exponent);
    for (const Vec& x : f.probes) {
      const double change = std::abs(apply_blend_at(field, x, SchemeParams{Exponent::infinity(), 2, h}, st) - f.value(x));
      t.add(h, to_string(x), change, bound);
      worst_ratio = std::max(worst_ratio, change / bound);
      r.check(change <= bound, "h=" + detail::fmt(h) + " x=" + to_string(x) + ": change " + detail::fmt(change) +
                                   " exceeds " + detail::fmt(bound));
    }
  }
  r.summary = {{"max_change_over_bound", worst_ratio}};
  r.tables = {t};
  return r;
}

inline ExperimentResult run_axioms(const AxiomsConfig& c, const RunContext& ctx) {
  c.validate();
  ExperimentResult r;
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  struct Tally {
    int trials = 0, failures = 0;
    double worst = 0.0;
  };
  std::map<std::string, Tally> tally;
  auto record = [&](const std::string& name, double violation, double tol) {
    Tally& t = tally[name];
    ++t.trials;
    t.worst = std::max(t.worst, violation);
    if (violation > tol) ++t.failures;
  };
  auto random_field = [&](const GridSpec& spec) {
    std::vector<double> v(spec.size());
    for (double& x : v) x = unit(rng);
    return GridField(spec, std::move(v));
  };
  auto max_diff = [](const GridField& a, const GridField& b, auto&& fn) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.spec().size(); ++i) m = std::max(m, fn(a[i], b[i]));
    return m;
  };
  auto map_values = [](const GridField& u, auto&& fn) {
    std::vector<double> v(u.spec().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(u[i]);
    return u.with_values(std::move(v));
  };

  for (int trial = 0; trial < c.trials; ++trial) {
    const Exponent p = c.p[static_cast<std::size_t>(trial) % c.p.size()];
    const int dim = trial % 4 == 3 ? 3 : 2;
    const GridSpec spec = GridSpec::cube(dim, dim == 2 ? c.cells_2d : c.cells_3d, -1.0, 1.0);
    const double rad = 2.5 * spec.spacing;
    const SchemeParams params{p, dim, rad * rad / 2.0};
    const bool dirichlet = trial % 2 == 1;
    const StepMode mode = dirichlet ? StepMode(DirichletProblem{Domain::ball(Vec(dim), 0.8)}) : StepMode(FreeSpace{});
    StepOptions opt;
    opt.workers = ctx.workers;
    const Stepper stepper(spec, Interpolation::Linear, params, mode, opt);

    const GridField u = random_field(spec);
    const GridField su = stepper.apply(u);
    record("stability", std::max(0.0, su.sup_abs() - u.sup_abs()), c.tol);

    const GridField w = random_field(spec);
    const GridField v = u.with_values([&] {
      std::vector<double> m(spec.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::max(u[i], w[i]);
      return m;
    }());
    record("monotonicity", max_diff(su, stepper.apply(v), [](double a, double b) { return std::max(0.0, a - b); }),
           c.tol);

    const double shift = 2.0 * unit(rng);
    const GridField shifted = stepper.apply(map_values(u, [shift](double x) { return x + shift; }));
    record("translation", max_diff(shifted, su, [shift](double a, double b) { return std::abs(a - (b + shift)); }),
           c.tol);

    const double alpha = 0.1 + 1.45 * (unit(rng) + 1.0);
    const GridField scaled = stepper.apply(map_values(u, [alpha](double x) { return alpha * x; }));
    record("homogeneity", max_diff(scaled, su, [alpha](double a, double b) { return std::abs(a - alpha * b); }),
           c.tol);

    // N = 1: every p gives the two-point average, bit for bit.
    const GridSpec line = GridSpec::cube(1, 64, -1.0, 1.0);
    const GridField u1 = random_field(line);
    const double h1 = std::pow(2.5 * line.spacing, 2) / 2.0;
    const GridField base = step(u1, SchemeParams{c.p.front(), 1, h1});
    double mismatches = 0.0;
    for (const Exponent& q : c.p) {
      const GridField other = step(u1, SchemeParams{q, 1, h1});
      for (std::size_t i = 0; i < line.size(); ++i) mismatches += other[i] != base[i] ? 1.0 : 0.0;
    }
    record("collapse-1d", mismatches, 0.0);

    if (trial % 10 == 0) {
      StepOptions par = opt;
      par.workers = 3;
      const GridField sp = Stepper(spec, Interpolation::Linear, params, mode, par).apply(u);
      record("determinism", max_diff(sp, su, [](double a, double b) { return a != b ? 1.0 : 0.0; }), 0.0);
    }
  }

  Table t{"axioms", {"property", "trials", "failures", "max_violation"}, {}};
  json props = json::object();
  for (const auto& [name, tl] : tally) {
    t.add(name, tl.trials, tl.failures, tl.worst);
    props[name] = {{"result", tl.failures == 0 ? "pass" : "fail"}, {"trials", tl.trials},
                   {"failures", tl.failures}, {"max_violation", tl.worst}};
    r.check(tl.failures == 0, name + ": " + std::to_string(tl.failures) + " of " + std::to_string(tl.trials) +
                                  " trials violated");
  }
  r.summary = {{"properties", props}};
  r.tables = {t};
  return r;
}

// ---------------------------------------------------------------------------
// Dispatch

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"identities", "consistency", "evolve", "mcf", "extinction",
                                              "support", "dirichlet", "aronsson", "axioms"};
  return names;
}

/// A command, its parameters and the run context; round-trips through JSON.
struct ExperimentConfig {
  std::string command;
  json params = json::object();
  RunContext context;

  /// Parameters with every default filled in.
  [[nodiscard]] json resolved_params() const;

  [[nodiscard]] json to_json() const {
    return {{"schema_version", kReportSchemaVersion},
            {"command", command},
            {"seed", context.seed},
            {"workers", context.workers},
            {"snapshots", context.snapshots},
            {"params", params}};
  }

  static ExperimentConfig from_json(const json& j) {
    statflow::detail::require(j.is_object(), "config must be a JSON object");
    static const std::set<std::string> known{"schema_version", "command", "seed", "workers", "snapshots", "params"};
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) throw UsageError("unknown config key '" + key + "'");
    ExperimentConfig c;
    try {
      if (j.contains("schema_version"))
        statflow::detail::require(j["schema_version"].get<int>() == kReportSchemaVersion,
                                  "unsupported config schema_version");
      c.command = j.at("command").get<std::string>();
      c.context.seed = j.value("seed", std::uint64_t{42});
      c.context.workers = j.value("workers", 1);
      c.context.snapshots = j.value("snapshots", std::vector<int>{});
      c.params = j.value("params", json::object());
    } catch (const json::exception& e) {
      throw UsageError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
  }

  void validate() const {
    const auto& names = commands();
    statflow::detail::require(std::find(names.begin(), names.end(), command) != names.end(),
                              "unknown command '" + command + "'");
    statflow::detail::require(context.workers >= 1, "workers must be >= 1");
    for (int s : context.snapshots) statflow::detail::require(s >= 1, "snapshot indices must be >= 1");
    static_cast<void>(resolved_params());  // parses and validates
  }
};

namespace detail {

template <class C>
json resolve(const json& params) {
  return to_json(from_json<C>(params));
}

}  // namespace detail

inline json ExperimentConfig::resolved_params() const {
  if (command == "identities") return detail::resolve<IdentitiesConfig>(params);
  if (command == "consistency") return detail::resolve<ConsistencyConfig>(params);
  if (command == "evolve") return detail::resolve<EvolveConfig>(params);
  if (command == "mcf") return detail::resolve<McfConfig>(params);
  if (command == "extinction") return detail::resolve<ExtinctionConfig>(params);
  if (command == "support") return detail::resolve<SupportConfig>(params);
  if (command == "dirichlet") return detail::resolve<DirichletConfig>(params);
  if (command == "aronsson") return detail::resolve<AronssonConfig>(params);
  if (command == "axioms") return detail::resolve<AxiomsConfig>(params);
  throw UsageError("unknown command '" + command + "'");
}

inline ExperimentResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  const json& p = cfg.params;
  const RunContext& ctx = cfg.context;
  const std::string& c = cfg.command;
  if (c == "identities") return run_identities(from_json<IdentitiesConfig>(p), ctx);
  if (c == "consistency") return run_consistency(from_json<ConsistencyConfig>(p), ctx);
  if (c == "evolve") return run_evolve(from_json<EvolveConfig>(p), ctx);
  if (c == "mcf") return run_mcf(from_json<McfConfig>(p), ctx);
  if (c == "extinction") return run_extinction(from_json<ExtinctionConfig>(p), ctx);
  if (c == "support") return run_support(from_json<SupportConfig>(p), ctx);
  if (c == "dirichlet") return run_dirichlet(from_json<DirichletConfig>(p), ctx);
  if (c == "aronsson") return run_aronsson(from_json<AronssonConfig>(p), ctx);
  return run_axioms(from_json<AxiomsConfig>(p), ctx);
}

/// The report artifact: config (with resolved parameters), schema version,
/// pass flag, failure list and summary.
inline json report(const ExperimentConfig& cfg, const ExperimentResult& r) {
  json config = cfg.to_json();
  config["params"] = cfg.resolved_params();
  return {{"schema_version", kReportSchemaVersion},
          {"config", config},
          {"pass", r.pass},
          {"failures", r.failures},
          {"summary", r.summary}};
}

}  // namespace statflow::experiments
