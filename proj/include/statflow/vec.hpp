#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <string>

#include "statflow/error.hpp"

namespace statflow {

inline constexpr int kMaxDim = 3;

/// Small fixed-capacity vector in R^N, N <= 3. No heap traffic in hot loops.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int dim) : dim_(dim) { assert(dim >= 0 && dim <= kMaxDim); }
  Vec(std::initializer_list<double> xs) : dim_(static_cast<int>(xs.size())) {
    detail::require(xs.size() <= kMaxDim, "Vec supports at most 3 components");
    int i = 0;
    for (double x : xs) c_[i++] = x;
  }

  [[nodiscard]] int dim() const { return dim_; }
  double& operator[](int i) { return c_[i]; }
  double operator[](int i) const { return c_[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < dim_; ++i) c_[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  friend bool operator==(const Vec& a, const Vec& b) {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

  [[nodiscard]] bool finite() const {
    for (int i = 0; i < dim_; ++i)
      if (!std::isfinite(c_[i])) return false;
    return true;
  }

 private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

inline double dot(const Vec& a, const Vec& b) {
  assert(a.dim() == b.dim());
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

/// Symmetric N x N matrix (Hessians).
class Mat {
 public:
  Mat() = default;
  explicit Mat(int dim) : dim_(dim) {}

  [[nodiscard]] int dim() const { return dim_; }
  double& operator()(int i, int j) { return a_[i][j]; }
  double operator()(int i, int j) const { return a_[i][j]; }

  [[nodiscard]] double trace() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += a_[i][i];
    return s;
  }

  [[nodiscard]] Vec apply(const Vec& v) const {
    Vec out(dim_);
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim_; ++j) s += a_[i][j] * v[j];
      out[i] = s;
    }
    return out;
  }

  /// v . A v
  [[nodiscard]] double quadratic(const Vec& v) const { return dot(v, apply(v)); }

 private:
  std::array<std::array<double, kMaxDim>, kMaxDim> a_{};
  int dim_ = 0;
};

inline std::string to_string(const Vec& v) {
  std::string s = "(";
  for (int i = 0; i < v.dim(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

}  // namespace statflow
