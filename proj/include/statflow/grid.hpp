#pragma once

// Scalar fields on uniform Cartesian grids (N = 1..3) and analytic fields
// behind one evaluation interface.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "statflow/error.hpp"
#include "statflow/vec.hpp"

namespace statflow {

using Index = std::array<int, kMaxDim>;

/// Axis-aligned box [lo, hi].
struct Box {
  Vec lo;
  Vec hi;

  [[nodiscard]] int dim() const { return lo.dim(); }
  [[nodiscard]] bool empty() const {
    for (int a = 0; a < lo.dim(); ++a)
      if (!(lo[a] <= hi[a])) return true;
    return false;
  }
  [[nodiscard]] bool contains(const Vec& x, double tol = 0.0) const {
    for (int a = 0; a < lo.dim(); ++a)
      if (x[a] < lo[a] - tol || x[a] > hi[a] + tol) return false;
    return true;
  }
  /// Shrinks every face inward by `margin`; may produce an empty box.
  [[nodiscard]] Box shrunk(double margin) const {
    Box b = *this;
    for (int a = 0; a < lo.dim(); ++a) {
      b.lo[a] += margin;
      b.hi[a] -= margin;
    }
    return b;
  }
  static Box cube(int dim, double lo, double hi) {
    Box b{Vec(dim), Vec(dim)};
    for (int a = 0; a < dim; ++a) {
      b.lo[a] = lo;
      b.hi[a] = hi;
    }
    return b;
  }
};

struct GridSpec {
  int dim = 2;
  Index cells{0, 0, 0};
  Vec origin;
  double spacing = 1.0;
  std::size_t max_points = std::size_t{1} << 24;

  /// Uniform grid with `cells` cells per axis covering [lo, hi]^dim.
  static GridSpec cube(int dim, int cells, double lo, double hi) {
    GridSpec g;
    g.dim = dim;
    g.origin = Vec(dim);
    for (int a = 0; a < dim; ++a) {
      g.cells[a] = cells;
      g.origin[a] = lo;
    }
    g.spacing = (hi - lo) / cells;
    g.validate();
    return g;
  }

  void validate() const {
    detail::require(dim >= 1 && dim <= kMaxDim, "grid dimension must be 1, 2 or 3");
    detail::require(origin.dim() == dim, "grid origin length must equal the dimension");
    detail::require(origin.finite(), "grid origin must be finite");
    detail::require(std::isfinite(spacing) && spacing > 0.0, "grid spacing must be positive");
    for (int a = 0; a < dim; ++a)
      detail::require(cells[a] >= 4, "grid needs at least 4 cells per axis");
    long double total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<long double>(cells[a] + 1);
    detail::require(total <= static_cast<long double>(max_points),
                    "grid point count exceeds the configured cap");
  }

  [[nodiscard]] int nodes(int axis) const { return axis < dim ? cells[axis] + 1 : 1; }

  [[nodiscard]] std::size_t size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(nodes(a));
    return n;
  }

  /// Row-major strides, last axis fastest.
  [[nodiscard]] std::array<std::ptrdiff_t, kMaxDim> strides() const {
    std::array<std::ptrdiff_t, kMaxDim> s{0, 0, 0};
    std::ptrdiff_t acc = 1;
    for (int a = dim - 1; a >= 0; --a) {
      s[a] = acc;
      acc *= nodes(a);
    }
    return s;
  }

  [[nodiscard]] std::size_t flat(const Index& i) const {
    auto s = strides();
    std::ptrdiff_t f = 0;
    for (int a = 0; a < dim; ++a) f += s[a] * i[a];
    return static_cast<std::size_t>(f);
  }

  [[nodiscard]] Index unflatten(std::size_t f) const {
    Index i{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      const auto n = static_cast<std::size_t>(nodes(a));
      i[a] = static_cast<int>(f % n);
      f /= n;
    }
    return i;
  }

  [[nodiscard]] Vec node(const Index& i) const {
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x[a] = origin[a] + spacing * i[a];
    return x;
  }
  [[nodiscard]] Vec node(std::size_t f) const { return node(unflatten(f)); }

  [[nodiscard]] Box box() const {
    Box b{origin, origin};
    for (int a = 0; a < dim; ++a) b.hi[a] = origin[a] + spacing * cells[a];
    return b;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    if (a.dim != b.dim || a.spacing != b.spacing || !(a.origin == b.origin)) return false;
    for (int i = 0; i < a.dim; ++i)
      if (a.cells[i] != b.cells[i]) return false;
    return true;
  }
};

enum class ExtensionKind { ClampToNearestNode, Constant, Periodic };

/// How a grid field is continued outside its box. Applied to virtual nodes,
/// so interpolation near the boundary sees extended node values.
struct ExtensionPolicy {
  ExtensionKind kind = ExtensionKind::ClampToNearestNode;
  double far_value = 0.0;

  static ExtensionPolicy clamp() { return {}; }
  static ExtensionPolicy constant(double v) { return {ExtensionKind::Constant, v}; }
  static ExtensionPolicy periodic() { return {ExtensionKind::Periodic, 0.0}; }

  friend bool operator==(const ExtensionPolicy&, const ExtensionPolicy&) = default;
};

/// Linear is multilinear over the 2^N surrounding nodes and is monotone.
/// Cubic is tensor 4-point Lagrange (4^N nodes): fourth-order accurate but
/// not monotone.
enum class Interpolation { Linear, Cubic };

namespace detail {

inline constexpr double kSnapTolerance = 1e-9;

/// Index-space coordinate snapped to the nearest integer when within
/// round-off, so nodes reproduce stored values bit-for-bit.
inline double snap(double s) {
  const double r = std::nearbyint(s);
  return std::abs(s - r) <= kSnapTolerance ? r : s;
}

/// 1-D interpolation taps for fractional index coordinate s.
struct AxisTaps {
  int first = 0;  // index of first tap
  int count = 1;
  std::array<double, 4> w{1.0, 0.0, 0.0, 0.0};
};

inline AxisTaps axis_taps(double s, Interpolation interp) {
  s = snap(s);
  const double base = std::floor(s);
  const double f = s - base;
  AxisTaps t;
  const int b = static_cast<int>(base);
  if (f == 0.0) {
    t.first = b;
    t.count = 1;
    t.w = {1.0, 0.0, 0.0, 0.0};
    return t;
  }
  if (interp == Interpolation::Linear) {
    t.first = b;
    t.count = 2;
    t.w = {1.0 - f, f, 0.0, 0.0};
  } else {
    t.first = b - 1;
    t.count = 4;
    t.w = {-f * (f - 1.0) * (f - 2.0) / 6.0, (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
           -(f + 1.0) * f * (f - 2.0) / 2.0, (f + 1.0) * f * (f - 1.0) / 6.0};
  }
  return t;
}

/// Tensor-product interpolation taps of one sample point, flattened in a
/// fixed order (axis 0 outermost). Indices are relative to `base`.
struct TapList {
  std::vector<Index> index;
  std::vector<double> weight;
};

inline TapList make_taps(const Vec& s, int dim, Interpolation interp) {
  std::array<AxisTaps, kMaxDim> ax{};
  for (int a = 0; a < dim; ++a) ax[a] = axis_taps(s[a], interp);
  for (int a = dim; a < kMaxDim; ++a) ax[a] = AxisTaps{};
  TapList t;
  for (int p = 0; p < ax[0].count; ++p)
    for (int q = 0; q < ax[1].count; ++q)
      for (int r = 0; r < ax[2].count; ++r) {
        t.index.push_back({ax[0].first + p, dim > 1 ? ax[1].first + q : 0, dim > 2 ? ax[2].first + r : 0});
        t.weight.push_back(ax[0].w[p] * ax[1].w[q] * ax[2].w[r]);
      }
  return t;
}

}  // namespace detail

class GridField {
 public:
  GridField() = default;
  GridField(GridSpec spec, std::vector<double> values,
            ExtensionPolicy ext = ExtensionPolicy::clamp(),
            Interpolation interp = Interpolation::Linear)
      : spec_(std::move(spec)), values_(std::move(values)), ext_(ext), interp_(interp) {
    spec_.validate();
    detail::require(values_.size() == spec_.size(), "grid value array has the wrong length");
    for (double v : values_) detail::require(std::isfinite(v), "grid values must be finite");
    if (ext_.kind == ExtensionKind::Constant)
      detail::require(std::isfinite(ext_.far_value), "far-field value must be finite");
  }

  template <class F>
  static GridField from_function(const GridSpec& spec, F&& f,
                                 ExtensionPolicy ext = ExtensionPolicy::clamp(),
                                 Interpolation interp = Interpolation::Linear) {
    spec.validate();
    std::vector<double> v(spec.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(spec.node(i));
    return GridField(spec, std::move(v), ext, interp);
  }

  [[nodiscard]] const GridSpec& spec() const { return spec_; }
  [[nodiscard]] int dim() const { return spec_.dim; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] ExtensionPolicy extension() const { return ext_; }
  [[nodiscard]] Interpolation interpolation() const { return interp_; }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

  /// Same grid, extension and interpolation, different values.
  [[nodiscard]] GridField with_values(std::vector<double> v) const {
    return GridField(spec_, std::move(v), ext_, interp_);
  }
  [[nodiscard]] GridField with_interpolation(Interpolation interp) const {
    GridField g = *this;
    g.interp_ = interp;
    return g;
  }

  /// Value of a (possibly virtual, out-of-box) node after the extension policy.
  [[nodiscard]] double node_value(Index i) const {
    for (int a = 0; a < spec_.dim; ++a) {
      const int n = spec_.nodes(a);
      if (i[a] >= 0 && i[a] < n) continue;
      switch (ext_.kind) {
        case ExtensionKind::ClampToNearestNode:
          i[a] = std::clamp(i[a], 0, n - 1);
          break;
        case ExtensionKind::Constant:
          return ext_.far_value;
        case ExtensionKind::Periodic: {
          const int period = spec_.cells[a];
          i[a] = ((i[a] % period) + period) % period;
          break;
        }
      }
    }
    return values_[spec_.flat(i)];
  }

  /// Interpolated value at physical point x (extension applied out of box).
  [[nodiscard]] double sample(const Vec& x) const {
    detail::require(x.dim() == spec_.dim, "sample point dimension does not match the field");
    detail::require(x.finite(), "sample point must be finite");
    return sample_index_space(index_coordinates(x));
  }

  [[nodiscard]] Vec index_coordinates(const Vec& x) const {
    Vec s(spec_.dim);
    for (int a = 0; a < spec_.dim; ++a) s[a] = (x[a] - spec_.origin[a]) / spec_.spacing;
    return s;
  }

  /// Interpolation at fractional node coordinates.
  [[nodiscard]] double sample_index_space(const Vec& s) const {
    const detail::TapList taps = detail::make_taps(s, spec_.dim, interp_);
    double acc = 0.0;
    for (std::size_t t = 0; t < taps.weight.size(); ++t) acc += taps.weight[t] * node_value(taps.index[t]);
    return acc;
  }

  [[nodiscard]] double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
  [[nodiscard]] double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
  [[nodiscard]] double sup_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  GridSpec spec_;
  std::vector<double> values_;
  ExtensionPolicy ext_;
  Interpolation interp_ = Interpolation::Linear;
};

/// A pure function of an N-vector, with optional exact derivatives.
struct AnalyticField {
  int dim = 2;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

class ScalarField {
 public:
  ScalarField(GridField g) : f_(std::move(g)) {}  // NOLINT(google-explicit-constructor)
  ScalarField(AnalyticField a) : f_(std::move(a)) {  // NOLINT(google-explicit-constructor)
    detail::require(std::get<AnalyticField>(f_).value != nullptr, "analytic field needs a value function");
  }

  [[nodiscard]] int dim() const { return grid_backed() ? grid().dim() : analytic().dim; }
  [[nodiscard]] bool grid_backed() const { return std::holds_alternative<GridField>(f_); }
  [[nodiscard]] const GridField& grid() const { return std::get<GridField>(f_); }
  [[nodiscard]] const AnalyticField& analytic() const { return std::get<AnalyticField>(f_); }

  [[nodiscard]] double sample(const Vec& x) const {
    if (grid_backed()) return grid().sample(x);
    const auto& a = analytic();
    detail::require(x.dim() == a.dim, "sample point dimension does not match the field");
    detail::require(x.finite(), "sample point must be finite");
    return a.value(x);
  }

 private:
  std::variant<GridField, AnalyticField> f_;
};

inline double sample(const ScalarField& f, const Vec& x) { return f.sample(x); }

/// Max of |f - g| over the grid nodes inside `region`. Nodes come from the
/// first grid-backed argument.
inline double linf_distance(const ScalarField& f, const ScalarField& g, const Box& region) {
  detail::require(f.dim() == g.dim(), "linf_distance: fields have different dimensions");
  detail::require(region.dim() == f.dim(), "linf_distance: region dimension mismatch");
  detail::require(!region.empty(), "linf_distance: empty region");
  const GridField* nodes = f.grid_backed() ? &f.grid() : (g.grid_backed() ? &g.grid() : nullptr);
  detail::require(nodes != nullptr, "linf_distance: at least one field must be grid-backed");
  const double tol = 1e-9 * nodes->spec().spacing;
  for (const ScalarField* s : {&f, &g}) {
    if (!s->grid_backed()) continue;
    const Box b = s->grid().spec().box();
    detail::require(b.contains(region.lo, tol) && b.contains(region.hi, tol),
                    "linf_distance: region is not inside the grid box");
  }
  const GridSpec& spec = nodes->spec();
  // Fields on the node grid are read directly; anything else is sampled.
  auto value_at = [&spec](const ScalarField& s, std::size_t i, const Vec& x) {
    return s.grid_backed() && s.grid().spec() == spec ? s.grid()[i] : s.sample(x);
  };
  double worst = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Vec x = spec.node(i);
    if (!region.contains(x, tol)) continue;
    ++counted;
    worst = std::max(worst, std::abs(value_at(f, i, x) - value_at(g, i, x)));
  }
  detail::require(counted > 0, "linf_distance: region contains no grid nodes");
  return worst;
}

}  // namespace statflow
