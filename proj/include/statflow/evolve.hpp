#pragma once

// The statistical operator M^h_p applied pointwise and iterated over a grid
// (free space and Dirichlet modes), plus the 2-D Catte min-max segment
// operator and front/support diagnostics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "statflow/error.hpp"
#include "statflow/grid.hpp"
#include "statflow/parallel.hpp"
#include "statflow/statistics.hpp"
#include "statflow/stencil.hpp"
#include "statflow/vec.hpp"

namespace statflow {

/// Sample counts and 3-D families for the mean and order-statistic stencils.
/// A zero count selects the default for the dimension.
struct StencilConfig {
  int mean_samples = 0;
  int order_samples = 0;
  StencilKind mean_kind_3d = StencilKind::GaussAzimuth3D;
  StencilKind order_kind_3d = StencilKind::SymmetrizedFibonacci3D;

  static int default_samples(int dim) { return dim == 3 ? 128 : 64; }
  [[nodiscard]] int resolved_mean(int dim) const { return mean_samples ? mean_samples : default_samples(dim); }
  [[nodiscard]] int resolved_order(int dim) const { return order_samples ? order_samples : default_samples(dim); }
};

/// One stencil for the mean and one for median/midrange, same radius.
struct OperatorStencils {
  SphereStencil mean;
  SphereStencil order;
  bool shared = false;  // order statistics reuse the mean stencil's samples
};

inline OperatorStencils build_operator_stencils(int dim, double h, const StencilConfig& cfg = {}) {
  OperatorStencils s;
  const int km = cfg.resolved_mean(dim), ko = cfg.resolved_order(dim);
  if (dim == 3) {
    s.mean = build_stencil(3, h, km, cfg.mean_kind_3d);
    s.order = build_stencil(3, h, ko, cfg.order_kind_3d);
    return s;
  }
  s.mean = build_stencil(dim, h, km, StencilKind::UniformCircle);
  s.shared = dim == 1 || km == ko;
  s.order = s.shared ? s.mean : build_stencil(dim, h, ko, StencilKind::UniformCircle);
  return s;
}

namespace detail {

/// Statistic values a blend needs, computed from sample buffers. The mean is
/// taken before the median reorders a shared buffer.
inline double blend_samples(const BlendWeights& w, std::span<double> mean_samples,
                            std::span<const double> mean_weights, std::span<double> order_samples) {
  double mean = 0.0;
  if (w.mean > 0.0) {
    mean = pairwise_dot(mean_samples.data(), mean_weights.data(), mean_samples.size());
    if (w.mean == 1.0) return mean;
  }
  double order = 0.0;
  if (w.midrange > 0.0) {
    order = midrange_unchecked(order_samples);
    if (w.midrange == 1.0) return order;
  } else {
    order = median_inplace(order_samples);
    if (w.median == 1.0) return order;
  }
  return (w.median + w.midrange) * order + w.mean * mean;
}

inline double apply_weights_at(const ScalarField& f, const Vec& x, const BlendWeights& w,
                               const OperatorStencils& st) {
  const int dim = f.dim();
  if (dim == 1) {
    const double r = st.mean.radius;
    const double a = f.sample(x - Vec{r}), b = f.sample(x + Vec{r});
    return (a + b) / 2.0;
  }
  std::vector<double> ms, os;
  if (w.mean > 0.0) {
    ms.resize(st.mean.size());
    for (std::size_t k = 0; k < ms.size(); ++k) ms[k] = f.sample(st.mean.point(x, k));
  }
  if (w.mean < 1.0) {
    if (st.shared && !ms.empty()) {
      os = ms;
    } else {
      os.resize(st.order.size());
      for (std::size_t k = 0; k < os.size(); ++k) os[k] = f.sample(st.order.point(x, k));
    }
  }
  for (double v : ms)
    if (!std::isfinite(v)) throw InternalError("non-finite sample around x=" + to_string(x));
  for (double v : os)
    if (!std::isfinite(v)) throw InternalError("non-finite sample around x=" + to_string(x));
  return blend_samples(w, ms, st.mean.weights, os);
}

inline void check_stencils(const OperatorStencils& st, int dim, double h) {
  detail::require(st.mean.dim == dim && st.order.dim == dim, "stencil dimension does not match the field");
  const double r = std::sqrt(2.0 * h);
  for (const SphereStencil* s : {&st.mean, &st.order})
    detail::require(std::abs(s->radius - r) <= 1e-12 * r, "stencil radius must equal sqrt(2h)");
}

}  // namespace detail

/// (M^h_p f)(x): (1-q) median + q mean (p <= 2) or (1-q) midrange + q mean
/// (p >= 2) over the sphere of radius sqrt(2h) about x. For N = 1 every p
/// reduces to the two-point average.
inline double apply_blend_at(const ScalarField& f, const Vec& x, const SchemeParams& params,
                             const OperatorStencils& stencils) {
  params.validate();
  detail::require(params.dim == f.dim(), "scheme dimension does not match the field");
  detail::require(x.dim() == f.dim(), "evaluation point dimension does not match the field");
  detail::check_stencils(stencils, f.dim(), params.h);
  const BlendWeights w = f.dim() == 1 ? BlendWeights{0.0, 1.0, 0.0} : blend_weights(params.p, params.dim);
  return detail::apply_weights_at(f, x, w, stencils);
}

/// A single statistic (mean, median, midrange or blend) over the stencils.
inline double apply_statistic_at(const ScalarField& f, const Vec& x, const Statistic& s, double h,
                                 const OperatorStencils& stencils) {
  detail::require(x.dim() == f.dim(), "evaluation point dimension does not match the field");
  detail::check_stencils(stencils, f.dim(), h);
  const BlendWeights w = f.dim() == 1 ? BlendWeights{0.0, 1.0, 0.0} : resolve(s, f.dim());
  return detail::apply_weights_at(f, x, w, stencils);
}

// ---------------------------------------------------------------------------
// Dirichlet geometry

/// Box or ball with an exact signed distance (negative inside).
struct Domain {
  enum class Shape { Box, Ball };
  Shape shape = Shape::Ball;
  Vec lo, hi;      // box
  Vec center;      // ball
  double radius = 1.0;

  static Domain box(const Box& b) {
    detail::require(!b.empty(), "domain box is empty");
    Domain d;
    d.shape = Shape::Box;
    d.lo = b.lo;
    d.hi = b.hi;
    return d;
  }
  static Domain ball(const Vec& c, double r) {
    detail::require(r > 0.0 && std::isfinite(r), "domain ball radius must be positive");
    Domain d;
    d.shape = Shape::Ball;
    d.center = c;
    d.radius = r;
    return d;
  }

  [[nodiscard]] int dim() const { return shape == Shape::Box ? lo.dim() : center.dim(); }

  [[nodiscard]] double signed_distance(const Vec& x) const {
    if (shape == Shape::Ball) return norm(x - center) - radius;
    double inside = std::numeric_limits<double>::infinity();
    double outside2 = 0.0;
    bool is_inside = true;
    for (int a = 0; a < x.dim(); ++a) {
      const double below = lo[a] - x[a], above = x[a] - hi[a];
      const double excess = std::max(below, above);
      if (excess > 0.0) {
        is_inside = false;
        outside2 += excess * excess;
      }
      inside = std::min(inside, std::min(x[a] - lo[a], hi[a] - x[a]));
    }
    return is_inside ? -inside : std::sqrt(outside2);
  }
};

enum class NodeClass : std::uint8_t { Interior, BoundaryBand, Exterior };

/// Nodes with |signed distance| < band_cells * dx form the boundary band and
/// keep their values (the boundary data g) exactly. Exterior nodes are never
/// updated and act as the extension of g for interpolation.
struct DirichletProblem {
  Domain domain;
  double band_cells = 0.5;

  [[nodiscard]] std::vector<NodeClass> classify(const GridSpec& spec) const {
    detail::require(domain.dim() == spec.dim, "Dirichlet domain dimension does not match the grid");
    const double band = band_cells * spec.spacing;
    std::vector<NodeClass> c(spec.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double sd = domain.signed_distance(spec.node(i));
      c[i] = sd <= -band ? NodeClass::Interior : (sd < band ? NodeClass::BoundaryBand : NodeClass::Exterior);
    }
    return c;
  }
};

struct FreeSpace {};

using StepMode = std::variant<FreeSpace, DirichletProblem>;

struct StepOptions {
  StencilConfig stencils;
  double radius_guard = 2.0;  // require sqrt(2h) >= radius_guard * dx
  int workers = 1;
};

namespace detail {

inline void advance(Index& i, const GridSpec& spec) {
  for (int a = spec.dim - 1; a >= 0; --a) {
    if (++i[a] < spec.nodes(a)) return;
    i[a] = 0;
  }
}

inline std::string describe_node(const GridSpec& spec, const Index& i) {
  std::ostringstream os;
  os << "node [";
  for (int a = 0; a < spec.dim; ++a) os << (a ? "," : "") << i[a];
  os << "] at x=" << to_string(spec.node(i));
  return os.str();
}

/// Precomputed interpolation taps for a fixed set of physical offsets from a
/// node. Every node shares it (translation invariance); nodes whose taps all
/// fall inside the grid read the value array directly, the rest go through
/// the extension policy. Both paths use the same weights in the same order.
class SamplingPlan {
 public:
  SamplingPlan() = default;
  SamplingPlan(const GridSpec& spec, Interpolation interp, std::span<const Vec> offsets) : dim_(spec.dim) {
    const auto stride = spec.strides();
    start_.push_back(0);
    Index lo{0, 0, 0}, hi{0, 0, 0};
    for (const Vec& off : offsets) {
      Vec s(spec.dim);
      for (int a = 0; a < spec.dim; ++a) s[a] = off[a] / spec.spacing;
      const TapList taps = make_taps(s, spec.dim, interp);
      for (std::size_t t = 0; t < taps.weight.size(); ++t) {
        std::ptrdiff_t f = 0;
        for (int a = 0; a < spec.dim; ++a) {
          f += stride[a] * taps.index[t][a];
          lo[a] = std::min(lo[a], taps.index[t][a]);
          hi[a] = std::max(hi[a], taps.index[t][a]);
        }
        rel_.push_back(taps.index[t]);
        flat_.push_back(f);
        w_.push_back(taps.weight[t]);
      }
      start_.push_back(w_.size());
    }
    for (int a = 0; a < spec.dim; ++a) {
      fast_lo_[a] = -lo[a];
      fast_hi_[a] = spec.nodes(a) - 1 - hi[a];
    }
  }

  [[nodiscard]] std::size_t samples() const { return start_.empty() ? 0 : start_.size() - 1; }

  [[nodiscard]] bool fast(const Index& i) const {
    for (int a = 0; a < dim_; ++a)
      if (i[a] < fast_lo_[a] || i[a] > fast_hi_[a]) return false;
    return true;
  }

  void gather(const GridField& u, const Index& i, std::size_t flat, double* out) const {
    const double* v = u.values().data();
    const std::size_t n = samples();
    if (fast(i)) {
      const double* base = v + flat;
      for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t t = start_[k]; t < start_[k + 1]; ++t) acc += w_[t] * base[flat_[t]];
        out[k] = acc;
      }
      return;
    }
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t t = start_[k]; t < start_[k + 1]; ++t) {
        Index j = i;
        for (int a = 0; a < dim_; ++a) j[a] += rel_[t][a];
        acc += w_[t] * u.node_value(j);
      }
      out[k] = acc;
    }
  }

 private:
  int dim_ = 0;
  std::vector<std::size_t> start_;
  std::vector<Index> rel_;
  std::vector<std::ptrdiff_t> flat_;
  std::vector<double> w_;
  Index fast_lo_{0, 0, 0}, fast_hi_{0, 0, 0};
};

inline std::vector<Vec> stencil_offsets(const SphereStencil& s) {
  std::vector<Vec> off;
  off.reserve(s.size());
  for (const Vec& d : s.directions) off.push_back(s.radius * d);
  return off;
}

}  // namespace detail

/// One application of M^h_p to grid fields of a fixed layout. Building the
/// sampling plans is the expensive part, so evolve() builds one Stepper and
/// applies it n times.
class Stepper {
 public:
  Stepper(const GridSpec& spec, Interpolation interp, const SchemeParams& params, StepMode mode = FreeSpace{},
          StepOptions opt = {})
      : spec_(spec), interp_(interp), params_(params), opt_(std::move(opt)) {
    spec_.validate();
    params_.validate();
    detail::require(params_.dim == spec_.dim, "scheme dimension N does not match the grid dimension");
    const double r = params_.radius();
    if (r < opt_.radius_guard * spec_.spacing) {
      std::ostringstream os;
      os << "stencil radius sqrt(2h)=" << r << " is below " << opt_.radius_guard
         << " x grid spacing dx=" << spec_.spacing << "; increase h or refine the grid";
      throw UsageError(os.str());
    }
    weights_ = spec_.dim == 1 ? BlendWeights{0.0, 1.0, 0.0} : blend_weights(params_.p, params_.dim);
    stencils_ = build_operator_stencils(spec_.dim, params_.h, opt_.stencils);
    ops_.push_back(make_operator(stencils_));

    if (const auto* dp = std::get_if<DirichletProblem>(&mode)) {
      dirichlet_ = true;
      classes_ = dp->classify(spec_);
      op_of_node_.assign(spec_.size(), 0);
      std::map<long long, std::uint32_t> cache;
      for (std::size_t i = 0; i < spec_.size(); ++i) {
        if (classes_[i] != NodeClass::Interior) continue;
        const double dist = -dp->domain.signed_distance(spec_.node(i));
        if (dist >= r) continue;
        // Quantize truncated radii to 1e-6 (rounding down keeps the sphere
        // inside the closed domain) so plans can be shared.
        const long long key = std::max<long long>(1, static_cast<long long>(std::floor(dist * 1e6)));
        auto [it, inserted] = cache.try_emplace(key, static_cast<std::uint32_t>(ops_.size()));
        if (inserted) {
          OperatorStencils s = stencils_;
          s.mean = s.mean.scaled(key * 1e-6);
          s.order = s.order.scaled(key * 1e-6);
          ops_.push_back(make_operator(s));
        }
        op_of_node_[i] = it->second;
      }
    }
  }

  [[nodiscard]] const SchemeParams& params() const { return params_; }
  [[nodiscard]] const OperatorStencils& stencils() const { return stencils_; }
  [[nodiscard]] std::size_t distinct_radii() const { return ops_.size(); }
  [[nodiscard]] const std::vector<NodeClass>& node_classes() const { return classes_; }

  [[nodiscard]] GridField apply(const GridField& u) const {
    detail::require(u.spec() == spec_, "field grid does not match the stepper grid");
    detail::require(u.interpolation() == interp_, "field interpolation does not match the stepper");
    std::vector<double> out(spec_.size());
    detail::parallel_for(spec_.size(), opt_.workers, [&](std::size_t begin, std::size_t end, int) {
      std::vector<double> mean_buf, order_buf;
      Index idx = spec_.unflatten(begin);
      for (std::size_t f = begin; f < end; ++f, detail::advance(idx, spec_)) {
        if (dirichlet_ && classes_[f] != NodeClass::Interior) {
          out[f] = u[f];
          continue;
        }
        const Op& op = ops_[dirichlet_ ? op_of_node_[f] : 0];
        double value = 0.0;
        if (weights_.mean > 0.0 || op.shared || spec_.dim == 1) {
          mean_buf.resize(op.mean.samples());
          op.mean.gather(u, idx, f, mean_buf.data());
        }
        if (spec_.dim == 1) {
          value = (mean_buf[0] + mean_buf[1]) / 2.0;
        } else if (weights_.mean == 1.0) {
          value = detail::pairwise_dot(mean_buf.data(), op.mean_weights.data(), mean_buf.size());
        } else if (op.shared) {
          value = detail::blend_samples(weights_, mean_buf, op.mean_weights, mean_buf);
        } else {
          order_buf.resize(op.order.samples());
          op.order.gather(u, idx, f, order_buf.data());
          value = detail::blend_samples(weights_, mean_buf, op.mean_weights, order_buf);
        }
        if (!std::isfinite(value))
          throw InternalError("non-finite value produced at " + detail::describe_node(spec_, idx));
        out[f] = value;
      }
    });
    return u.with_values(std::move(out));
  }

 private:
  struct Op {
    detail::SamplingPlan mean;
    detail::SamplingPlan order;
    std::vector<double> mean_weights;
    bool shared = false;
  };

  Op make_operator(const OperatorStencils& s) const {
    Op op;
    const auto mo = detail::stencil_offsets(s.mean);
    op.mean = detail::SamplingPlan(spec_, interp_, mo);
    op.mean_weights = s.mean.weights;
    op.shared = s.shared;
    if (!s.shared && spec_.dim > 1 && weights_.mean < 1.0) {
      const auto oo = detail::stencil_offsets(s.order);
      op.order = detail::SamplingPlan(spec_, interp_, oo);
    }
    return op;
  }

  GridSpec spec_;
  Interpolation interp_;
  SchemeParams params_;
  StepOptions opt_;
  BlendWeights weights_;
  OperatorStencils stencils_;
  std::vector<Op> ops_;
  bool dirichlet_ = false;
  std::vector<NodeClass> classes_;
  std::vector<std::uint32_t> op_of_node_;
};

inline GridField step(const GridField& u, const SchemeParams& params, const StepMode& mode = FreeSpace{},
                      const StepOptions& opt = {}) {
  return Stepper(u.spec(), u.interpolation(), params, mode, opt).apply(u);
}

struct EvolveOptions {
  StepOptions step;
  std::vector<int> snapshots;  // step indices in [1, n] to keep
};

struct EvolutionRun {
  SchemeParams params;
  int steps = 0;
  double t = 0.0;
  GridField result;
  std::vector<std::pair<int, GridField>> snapshots;
  std::vector<double> sup_abs;  // sup |u| after 0..n steps
  double seconds = 0.0;
};

/// u(t) ~ (M^{t/n}_p)^n u0.
inline EvolutionRun evolve(const GridField& u0, Exponent p, double t, int n, const StepMode& mode = FreeSpace{},
                           const EvolveOptions& opt = {}) {
  detail::require(n >= 1, "step count n must be >= 1");
  detail::require(std::isfinite(t) && t > 0.0, "target time t must be positive");
  std::vector<int> snaps = opt.snapshots;
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  for (int s : snaps) detail::require(s >= 1 && s <= n, "snapshot index out of range [1, n]");

  EvolutionRun run;
  run.params = SchemeParams{p, u0.dim(), t / n};
  run.steps = n;
  run.t = t;
  const auto start = std::chrono::steady_clock::now();
  const Stepper stepper(u0.spec(), u0.interpolation(), run.params, mode, opt.step);
  GridField u = u0;
  run.sup_abs.push_back(u.sup_abs());
  auto next_snap = snaps.begin();
  for (int k = 1; k <= n; ++k) {
    u = stepper.apply(u);
    run.sup_abs.push_back(u.sup_abs());
    if (next_snap != snaps.end() && *next_snap == k) {
      run.snapshots.emplace_back(k, u);
      ++next_snap;
    }
  }
  run.result = std::move(u);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

/// sup-distance between the n-step and 2n-step approximations on `region`.
inline double cauchy_gap(const GridField& u0, Exponent p, double t, int n, const Box& region,
                         const StepMode& mode = FreeSpace{}, const EvolveOptions& opt = {}) {
  const GridField a = evolve(u0, p, t, n, mode, opt).result;
  const GridField b = evolve(u0, p, t, 2 * n, mode, opt).result;
  return linf_distance(a, b, region);
}

// ---------------------------------------------------------------------------
// Catte operator: C_h u = (S_{2h} u + I_{2h} u) / 2 with
//   S_k u(x) = sup_theta inf_{|s| <= sqrt(2k)} u(x + s e_theta)
//   I_k u(x) = inf_theta sup_{|s| <= sqrt(2k)} u(x + s e_theta)

struct CatteOptions {
  int directions = 32;       // theta in [0, pi)
  int segment_samples = 17;  // points per segment, endpoints included
  int workers = 1;
};

class CatteStepper {
 public:
  CatteStepper(const GridSpec& spec, Interpolation interp, double h, CatteOptions opt = {})
      : spec_(spec), interp_(interp), opt_(opt) {
    detail::require(spec.dim == 2, "the Catte operator is defined for N=2 only");
    detail::require(std::isfinite(h) && h > 0.0, "step h must be positive");
    detail::require(opt.directions >= 8, "Catte operator needs at least 8 directions");
    detail::require(opt.segment_samples >= 2, "Catte operator needs at least 2 samples per segment");
    half_length_ = std::sqrt(2.0 * (2.0 * h));
    std::vector<Vec> offsets;
    for (int j = 0; j < opt.directions; ++j) {
      const double th = std::numbers::pi * j / opt.directions;
      const Vec e{std::cos(th), std::sin(th)};
      for (int m = 0; m < opt.segment_samples; ++m) {
        const double s = -half_length_ + 2.0 * half_length_ * m / (opt.segment_samples - 1);
        offsets.push_back(s * e);
      }
    }
    plan_ = detail::SamplingPlan(spec_, interp_, offsets);
  }

  [[nodiscard]] double half_length() const { return half_length_; }

  [[nodiscard]] GridField apply(const GridField& u) const {
    detail::require(u.spec() == spec_ && u.interpolation() == interp_, "field layout does not match the stepper");
    std::vector<double> out(spec_.size());
    const int D = opt_.directions, S = opt_.segment_samples;
    detail::parallel_for(spec_.size(), opt_.workers, [&](std::size_t begin, std::size_t end, int) {
      std::vector<double> buf(plan_.samples());
      Index idx = spec_.unflatten(begin);
      for (std::size_t f = begin; f < end; ++f, detail::advance(idx, spec_)) {
        plan_.gather(u, idx, f, buf.data());
        double sup_inf = -std::numeric_limits<double>::infinity();
        double inf_sup = std::numeric_limits<double>::infinity();
        for (int j = 0; j < D; ++j) {
          const auto seg = std::span<const double>(buf).subspan(static_cast<std::size_t>(j * S), S);
          const auto [lo, hi] = std::minmax_element(seg.begin(), seg.end());
          sup_inf = std::max(sup_inf, *lo);
          inf_sup = std::min(inf_sup, *hi);
        }
        out[f] = (sup_inf + inf_sup) / 2.0;
      }
    });
    return u.with_values(std::move(out));
  }

 private:
  GridSpec spec_;
  Interpolation interp_;
  CatteOptions opt_;
  double half_length_ = 0.0;
  detail::SamplingPlan plan_;
};

inline GridField catte_step_2d(const GridField& u, double h, const CatteOptions& opt = {}) {
  return CatteStepper(u.spec(), u.interpolation(), h, opt).apply(u);
}

inline GridField catte_evolve(const GridField& u0, double t, int n, const CatteOptions& opt = {}) {
  detail::require(n >= 1 && std::isfinite(t) && t > 0.0, "catte_evolve needs t > 0 and n >= 1");
  const CatteStepper stepper(u0.spec(), u0.interpolation(), t / n, opt);
  GridField u = u0;
  for (int k = 0; k < n; ++k) u = stepper.apply(u);
  return u;
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Radius of the smallest origin-centred ball holding every node with
/// |value| > eps; 0 when no node qualifies.
inline double measure_support_radius(const GridField& u, double eps) {
  detail::require(eps > 0.0, "support threshold eps must be positive");
  const GridSpec& s = u.spec();
  double r = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(u[i]) > eps) r = std::max(r, norm(s.node(i)));
  return r;
}

/// Zero crossing along each of the 2N axis rays from the origin (linear
/// interpolation between samples spaced dx), averaged.
inline double extract_zero_level_radius(const GridField& u) {
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  const GridSpec& s = u.spec();
  const Box box = s.box();
  const Vec origin(s.dim);
  detail::require(box.contains(origin), "zero-level extraction needs the origin inside the grid");
  double total = 0.0;
  for (int a = 0; a < s.dim; ++a) {
    for (int sign : {+1, -1}) {
      Vec dir(s.dim);
      dir[a] = sign;
      double prev = u.sample(origin);
      double found = -1.0;
      for (int k = 1;; ++k) {
        const double rho = k * s.spacing;
        const Vec x = rho * dir;
        if (!box.contains(x, 1e-12 * s.spacing)) break;
        const double cur = u.sample(x);
        if ((prev < 0.0) != (cur < 0.0) || cur == 0.0) {
          found = cur == prev ? rho : rho - s.spacing * cur / (cur - prev);
          break;
        }
        prev = cur;
      }
      if (found < 0.0)
        throw DomainError(std::string("no sign change along ray ") + (sign > 0 ? "+" : "-") + kAxis[a]);
      total += found;
    }
  }
  return total / (2 * s.dim);
}

}  // namespace statflow
