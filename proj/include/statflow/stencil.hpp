#pragma once

// Direction sets and quadrature weights discretizing the sphere of radius
// sqrt(2h) that every averaging operator samples.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "statflow/error.hpp"
#include "statflow/vec.hpp"

namespace statflow {

enum class StencilKind { UniformCircle, GaussAzimuth3D, SymmetrizedFibonacci3D };

inline std::string to_string(StencilKind k) {
  switch (k) {
    case StencilKind::UniformCircle:
      return "uniform-circle";
    case StencilKind::GaussAzimuth3D:
      return "gauss-azimuth-3d";
    case StencilKind::SymmetrizedFibonacci3D:
      return "symmetrized-fibonacci-3d";
  }
  return "?";
}

inline StencilKind stencil_kind_from_string(const std::string& s) {
  if (s == "uniform-circle") return StencilKind::UniformCircle;
  if (s == "gauss-azimuth-3d") return StencilKind::GaussAzimuth3D;
  if (s == "symmetrized-fibonacci-3d") return StencilKind::SymmetrizedFibonacci3D;
  throw UsageError("unknown stencil kind '" + s + "'");
}

struct SphereStencil {
  int dim = 0;
  double radius = 0.0;
  std::vector<Vec> directions;  // unit vectors
  std::vector<double> weights;  // nonnegative, sum to 1
  bool antipodal = false;       // direction multiset closed under negation

  [[nodiscard]] std::size_t size() const { return directions.size(); }

  /// Same directions and weights on a sphere of a different radius.
  [[nodiscard]] SphereStencil scaled(double new_radius) const {
    detail::require(std::isfinite(new_radius) && new_radius > 0.0, "stencil radius must be positive");
    SphereStencil s = *this;
    s.radius = new_radius;
    return s;
  }

  /// x + radius * d_k
  [[nodiscard]] Vec point(const Vec& x, std::size_t k) const { return x + radius * directions[k]; }
};

inline double stencil_radius(double h) {
  detail::require(std::isfinite(h) && h > 0.0, "step h must be positive and finite");
  return std::sqrt(2.0 * h);
}

namespace detail {

/// (P_n(z), P_{n-1}(z)) by the three-term recurrence.
inline std::pair<double, double> legendre(int n, double z) {
  double p0 = 1.0, p1 = z;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1], n >= 2,
/// symmetric by construction.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [pn, pnm1] = legendre(n, z);
      const double dz = pn / (n * (z * pn - pnm1) / (z * z - 1.0));
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const auto [pn, pnm1] = legendre(n, z);
    const double dp = n * (z * pn - pnm1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) {
    const double dp = n * legendre(n, 0.0).second;  // P_n'(0) = n P_{n-1}(0)
    x[n / 2] = 0.0;
    w[n / 2] = 2.0 / (dp * dp);
  }
  return {x, w};
}

/// Unit circle point at angle 2*pi*k/K with exact values on the axes.
inline Vec circle_direction(int k, int K) {
  if ((4 * k) % K == 0) {
    switch ((4 * k) / K) {
      case 0:
        return Vec{1.0, 0.0};
      case 1:
        return Vec{0.0, 1.0};
      case 2:
        return Vec{-1.0, 0.0};
      default:
        return Vec{0.0, -1.0};
    }
  }
  const double th = 2.0 * std::numbers::pi * k / K;
  return Vec{std::cos(th), std::sin(th)};
}

/// Admissible polar x azimuth factorization for GaussAzimuth3D: polar >= 2,
/// azimuth even and >= 4, polar as close to sqrt(K/2) as possible.
inline std::pair<int, int> gauss_azimuth_split(int K) {
  int best = 0;
  for (int p = 2; p * p * 2 <= K; ++p) {
    if (K % p) continue;
    const int az = K / p;
    if (az % 2 == 0 && az >= 4) best = p;
  }
  return {best, best ? K / best : 0};
}

}  // namespace detail

inline constexpr int kMinGaussAzimuthSamples = 8;

inline SphereStencil build_stencil(int dim, double h, int K, StencilKind kind) {
  SphereStencil s;
  s.dim = dim;
  s.radius = stencil_radius(h);
  s.antipodal = true;
  detail::require(dim >= 1 && dim <= 3, "stencil dimension must be 1, 2 or 3");

  if (dim == 1) {
    s.directions = {Vec{1.0}, Vec{-1.0}};
    s.weights = {0.5, 0.5};
    return s;
  }
  detail::require(K >= 2, "stencil needs at least 2 samples");
  detail::require(K % 2 == 0, "stencil sample count must be even for antipodal symmetry (K=" +
                                  std::to_string(K) + ")");

  if (dim == 2) {
    detail::require(kind == StencilKind::UniformCircle, "2-D stencils must be uniform-circle");
    const int half = K / 2;
    s.directions.resize(K);
    for (int k = 0; k < half; ++k) {
      s.directions[k] = detail::circle_direction(k, K);
      s.directions[k + half] = -s.directions[k];
    }
    s.weights.assign(K, 1.0 / K);
    return s;
  }

  detail::require(kind != StencilKind::UniformCircle, "uniform-circle stencils require N=2");
  if (kind == StencilKind::GaussAzimuth3D) {
    detail::require(K >= kMinGaussAzimuthSamples,
                    "gauss-azimuth-3d needs K >= 8 to integrate degree-2 polynomials exactly");
    const auto [np, naz] = detail::gauss_azimuth_split(K);
    detail::require(np >= 2, "gauss-azimuth-3d: K=" + std::to_string(K) +
                                 " has no polar x even-azimuth factorization");
    const auto [z, wz] = detail::gauss_legendre(np);
    s.directions.resize(K);
    s.weights.resize(K);
    auto at = [naz = naz](int i, int j) { return static_cast<std::size_t>(i * naz + j); };
    for (int i = 0; i < np; ++i) {
      const double rho = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
      for (int j = 0; j < naz; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / naz;
        s.weights[at(i, j)] = wz[i] / (2.0 * naz);
        s.directions[at(i, j)] = Vec{rho * std::cos(phi), rho * std::sin(phi), z[i]};
      }
    }
    // Make antipodes exact negations: (i, j) <-> (np-1-i, j+naz/2).
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < naz; ++j) {
        const int ii = np - 1 - i, jj = (j + naz / 2) % naz;
        if (at(ii, jj) > at(i, j)) s.directions[at(ii, jj)] = -s.directions[at(i, j)];
      }
    }
    return s;
  }

  // Symmetrized Fibonacci lattice: K/2 spiral points plus their antipodes.
  const int half = K / 2;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  s.directions.resize(K);
  for (int i = 0; i < half; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / half;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    s.directions[i] = Vec{rho * std::cos(phi), rho * std::sin(phi), z};
    s.directions[i + half] = -s.directions[i];
  }
  s.weights.assign(K, 1.0 / K);
  return s;
}

/// Debug dump: one row per direction, components then weight.
inline void write_stencil_csv(const SphereStencil& s, std::ostream& out) {
  static constexpr const char* kAxis[] = {"d0", "d1", "d2"};
  for (int a = 0; a < s.dim; ++a) out << kAxis[a] << ',';
  out << "weight\n";
  const auto old = out.precision(17);
  // Adding 0.0 prints negative zero as 0.
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (int a = 0; a < s.dim; ++a) out << s.directions[k][a] + 0.0 << ',';
    out << s.weights[k] << '\n';
  }
  out.precision(old);
}

}  // namespace statflow
