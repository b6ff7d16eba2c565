#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "statflow/evolve.hpp"

using namespace statflow;

namespace {

const std::vector<Exponent> kExponents{Exponent(1.0), Exponent(1.5), Exponent(2.0), Exponent(4.0),
                                       Exponent::infinity()};

AnalyticField analytic(int dim, std::function<double(const Vec&)> f) { return {dim, std::move(f), {}, {}}; }

GridField affine_grid(const GridSpec& g) {
  return GridField::from_function(g, [](const Vec& x) { return 0.4 - 0.8 * x[0] + (x.dim() > 1 ? 0.3 * x[1] : 0.0); });
}

std::string what_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ApplyBlend, ConstantFieldIsFixed) {
  for (int dim : {2, 3}) {
    const auto st = build_operator_stencils(dim, 0.01);
    for (const Exponent& p : kExponents) {
      const double v = apply_blend_at(analytic(dim, [](const Vec&) { return 2.5; }), Vec(dim), {p, dim, 0.01}, st);
      EXPECT_EQ(v, 2.5) << "p=" << p.to_string() << " N=" << dim;
    }
  }
}

TEST(ApplyBlend, AffineFieldIsFixed) {
  for (int dim : {2, 3}) {
    const auto st = build_operator_stencils(dim, 0.02);
    const auto f = analytic(dim, [](const Vec& x) {
      double s = 0.7;
      for (int a = 0; a < x.dim(); ++a) s += (a + 1.5) * x[a];
      return s;
    });
    Vec x(dim);
    x[0] = 0.3;
    for (const Exponent& p : kExponents)
      EXPECT_NEAR(apply_blend_at(f, x, {p, dim, 0.02}, st), f.value(x), 1e-14) << "p=" << p.to_string();
  }
}

TEST(ApplyBlend, OneDimensionIsTwoPointAverageForEveryP) {
  const double h = 0.08, r = std::sqrt(2 * h);
  const auto f = analytic(1, [](const Vec& x) { return std::exp(x[0]) * std::cos(3 * x[0]); });
  const auto st = build_operator_stencils(1, h);
  const double expected = (f.value(Vec{0.2 - r}) + f.value(Vec{0.2 + r})) / 2.0;
  for (const Exponent& p : kExponents) EXPECT_EQ(apply_blend_at(f, Vec{0.2}, {p, 1, h}, st), expected);
}

// Mean of |y|^2 over the sphere of radius sqrt(2h) is exactly 2h.
TEST(ApplyBlend, MeanOfParaboloidAtOriginIsTwoH) {
  for (int dim : {2, 3}) {
    for (double h : {0.1, 0.01, 1e-4}) {
      const auto st = build_operator_stencils(dim, h);
      const double v = apply_blend_at(analytic(dim, [](const Vec& x) { return dot(x, x); }), Vec(dim),
                                      {Exponent(2.0), dim, h}, st);
      EXPECT_NEAR(v, 2 * h, 1e-13 * h) << "N=" << dim;
    }
  }
}

TEST(ApplyBlend, ResultLiesBetweenSampleExtremes) {
  const double h = 0.05;
  const auto st = build_operator_stencils(2, h);
  const auto f = analytic(2, [](const Vec& x) { return std::sin(5 * x[0]) * std::exp(x[1]); });
  const Vec x{0.1, -0.3};
  double lo = 1e300, hi = -1e300;
  for (std::size_t k = 0; k < st.mean.size(); ++k) {
    const double v = f.value(st.mean.point(x, k));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const Exponent& p : kExponents) {
    const double v = apply_blend_at(f, x, {p, 2, h}, st);
    EXPECT_GE(v, lo);
    EXPECT_LE(v, hi);
  }
}

TEST(ApplyBlend, Errors) {
  const auto st = build_operator_stencils(2, 0.01);
  const auto nan_field = analytic(2, [](const Vec& x) { return x[0] > 0.05 ? std::nan("") : 0.0; });
  EXPECT_THROW(apply_blend_at(nan_field, Vec{0.0, 0.0}, {Exponent(2.0), 2, 0.01}, st), InternalError);
  const auto ok = analytic(2, [](const Vec&) { return 0.0; });
  EXPECT_THROW(apply_blend_at(ok, Vec{0.0, 0.0}, {Exponent(2.0), 2, 0.02}, st), UsageError);
  EXPECT_THROW(apply_blend_at(ok, Vec{0.0, 0.0}, {Exponent(0.5), 2, 0.01}, st), UsageError);
  EXPECT_THROW(apply_blend_at(ok, Vec{0.0, 0.0, 0.0}, {Exponent(2.0), 2, 0.01}, st), UsageError);
}

TEST(Step, GuardNamesBothQuantities) {
  const GridSpec g = GridSpec::cube(2, 16, -1.0, 1.0);  // dx = 0.125
  const auto u = affine_grid(g);
  const std::string msg = what_of([&] { (void)step(u, {Exponent(2.0), 2, 0.01}); });
  EXPECT_NE(msg.find("sqrt(2h)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("dx=0.125"), std::string::npos) << msg;
  StepOptions loose;
  loose.radius_guard = 1.0;
  EXPECT_NO_THROW((void)step(u, {Exponent(2.0), 2, 0.01}, FreeSpace{}, loose));
}

TEST(Step, ConstantIsFixedEverywhere) {
  const GridSpec g = GridSpec::cube(2, 20, -1.0, 1.0);
  const GridField u(g, std::vector<double>(g.size(), -1.25));
  for (const Exponent& p : kExponents) {
    const GridField v = step(u, {p, 2, 0.03});
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(v[i], -1.25);
  }
}

// The sampling plan (fast and boundary paths) must agree with pointwise
// evaluation on the same grid field.
TEST(Step, AgreesWithPointwiseOperator) {
  for (int dim : {2, 3}) {
    const GridSpec g = GridSpec::cube(dim, dim == 2 ? 20 : 10, -1.0, 1.0);
    for (auto interp : {Interpolation::Linear, Interpolation::Cubic}) {
      const auto u = GridField::from_function(
          g, [](const Vec& x) { return std::sin(2 * x[0]) + x[1] * x[1]; }, ExtensionPolicy::clamp(), interp);
      const double r = 2.5 * g.spacing, h = r * r / 2;
      const auto st = build_operator_stencils(dim, h);
      for (const Exponent& p : kExponents) {
        const GridField v = step(u, {p, dim, h});
        for (std::size_t i = 0; i < g.size(); i += 7)
          EXPECT_NEAR(v[i], apply_blend_at(u, g.node(i), {p, dim, h}, st), 1e-13)
              << "N=" << dim << " p=" << p.to_string() << " node " << i;
      }
    }
  }
}

TEST(Step, ResultIsIndependentOfWorkerCount) {
  const GridSpec g = GridSpec::cube(2, 40, -1.0, 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(g.size());
  for (double& x : v) x = d(rng);
  const GridField u(g, v);
  for (const Exponent& p : kExponents) {
    StepOptions one, many;
    many.workers = 4;
    const GridField a = step(u, {p, 2, 0.01}, FreeSpace{}, one);
    const GridField b = step(u, {p, 2, 0.01}, FreeSpace{}, many);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(a[i], b[i]);
  }
}

TEST(Domain, ExactSignedDistance) {
  const Domain ball = Domain::ball(Vec{0.5, 0.0}, 1.0);
  EXPECT_NEAR(ball.signed_distance(Vec{0.5, 0.0}), -1.0, 1e-15);
  EXPECT_NEAR(ball.signed_distance(Vec{2.5, 0.0}), 1.0, 1e-15);
  const Domain box = Domain::box(Box{Vec{-1.0, -2.0}, Vec{1.0, 2.0}});
  EXPECT_NEAR(box.signed_distance(Vec{0.0, 0.0}), -1.0, 1e-15);
  EXPECT_NEAR(box.signed_distance(Vec{0.5, 1.9}), -0.1, 1e-15);
  EXPECT_NEAR(box.signed_distance(Vec{4.0, 6.0}), 5.0, 1e-15);
  EXPECT_THROW(Domain::ball(Vec{0.0, 0.0}, -1.0), UsageError);
}

TEST(Dirichlet, ClassificationCoversEveryNode) {
  const GridSpec g = GridSpec::cube(2, 40, -1.2, 1.2);
  const DirichletProblem prob{Domain::ball(Vec(2), 1.0)};
  const auto cls = prob.classify(g);
  int counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    ++counts[static_cast<int>(cls[i])];
    const double sd = prob.domain.signed_distance(g.node(i));
    if (cls[i] == NodeClass::BoundaryBand) { EXPECT_LT(std::abs(sd), 0.5 * g.spacing); }
  }
  EXPECT_GT(counts[0], 0);
  EXPECT_GT(counts[1], 0);
  EXPECT_GT(counts[2], 0);
  EXPECT_EQ(counts[0] + counts[1] + counts[2], static_cast<int>(g.size()));
}

TEST(Dirichlet, BoundaryAndExteriorNodesKeepTheirValues) {
  const GridSpec g = GridSpec::cube(2, 40, -1.2, 1.2);
  const DirichletProblem prob{Domain::ball(Vec(2), 1.0)};
  const auto u = GridField::from_function(g, [](const Vec& x) { return std::sin(4 * x[0]) * x[1]; });
  const auto cls = prob.classify(g);
  for (const Exponent& p : kExponents) {
    const Stepper st(g, Interpolation::Linear, {p, 2, 0.02}, prob);
    EXPECT_GT(st.distinct_radii(), 1u);
    const GridField v = st.apply(u);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (cls[i] != NodeClass::Interior) { ASSERT_EQ(v[i], u[i]); }
  }
}

// Truncated spheres stay centred, so affine data is preserved at every node.
TEST(Dirichlet, AffineDataIsPreserved) {
  const GridSpec g = GridSpec::cube(2, 40, -1.2, 1.2);
  const auto u = affine_grid(g);
  for (const Exponent& p : kExponents) {
    const GridField v = step(u, {p, 2, 0.02}, DirichletProblem{Domain::box(Box::cube(2, -1.0, 1.0))});
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(v[i], u[i], 1e-13);
  }
}

TEST(Evolve, AffineIsPreservedOnTheInterior) {
  const GridSpec g = GridSpec::cube(2, 40, -1.0, 1.0);
  const auto u = affine_grid(g);
  for (const Exponent& p : kExponents) {
    const auto run = evolve(u, p, 0.05, 2);
    EXPECT_NEAR(linf_distance(run.result, u, Box::cube(2, -0.4, 0.4)), 0.0, 1e-13);
  }
}

TEST(Evolve, BookkeepingAndSnapshots) {
  const GridSpec g = GridSpec::cube(2, 32, -1.0, 1.0);
  const auto u = GridField::from_function(g, [](const Vec& x) { return std::cos(3 * x[0]) - x[1]; });
  EvolveOptions opt;
  opt.snapshots = {4, 2, 4};
  const auto run = evolve(u, Exponent(1.5), 0.1, 5, FreeSpace{}, opt);
  EXPECT_DOUBLE_EQ(run.params.h * run.steps, run.t);
  ASSERT_EQ(run.snapshots.size(), 2u);
  EXPECT_EQ(run.snapshots[0].first, 2);
  EXPECT_EQ(run.snapshots[1].first, 4);
  ASSERT_EQ(run.sup_abs.size(), 6u);
  for (std::size_t k = 1; k < run.sup_abs.size(); ++k) EXPECT_LE(run.sup_abs[k], run.sup_abs[k - 1]);
  opt.snapshots = {9};
  EXPECT_THROW(evolve(u, Exponent(1.5), 0.1, 5, FreeSpace{}, opt), UsageError);
  EXPECT_THROW(evolve(u, Exponent(1.5), 0.1, 0), UsageError);
}

TEST(Evolve, CauchyGapVanishesForConstantAndAffineData) {
  const GridSpec g = GridSpec::cube(2, 32, -1.0, 1.0);
  const GridField c(g, std::vector<double>(g.size(), 0.75));
  EXPECT_EQ(cauchy_gap(c, Exponent(1.0), 0.05, 2, Box::cube(2, -1.0, 1.0)), 0.0);
  EXPECT_NEAR(cauchy_gap(affine_grid(g), Exponent(4.0), 0.05, 2, Box::cube(2, -0.25, 0.25)), 0.0, 1e-13);
}

TEST(Catte, ConstantAndErrors) {
  const GridSpec g = GridSpec::cube(2, 24, -1.0, 1.0);
  const GridField c(g, std::vector<double>(g.size(), 3.0));
  const GridField v = catte_step_2d(c, 0.01);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(v[i], 3.0);
  EXPECT_THROW(catte_step_2d(GridField(GridSpec::cube(3, 8, 0, 1), std::vector<double>(729, 0.0)), 0.01), UsageError);
  EXPECT_THROW(catte_step_2d(c, 0.01, {4, 17, 1}), UsageError);
}

// Oracle: for affine phi the segment extremes are phi(x) -/+ l |a.e|, so the
// sup-inf and inf-sup over a dense set of directions average back to phi(x).
TEST(Catte, AffineBruteForceAndGrid) {
  const Vec a{0.9, -0.35};
  auto phi = [&a](const Vec& x) { return 0.2 + dot(a, x); };
  const double ell = 0.3;
  const Vec x{0.1, 0.2};
  double sup_inf = -1e300, inf_sup = 1e300;
  for (int j = 0; j < 4000; ++j) {
    const double th = std::numbers::pi * j / 4000;
    const Vec e{std::cos(th), std::sin(th)};
    double lo = 1e300, hi = -1e300;
    for (int m = 0; m <= 200; ++m) {
      const double v = phi(x + (-ell + 2 * ell * m / 200) * e);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    sup_inf = std::max(sup_inf, lo);
    inf_sup = std::min(inf_sup, hi);
  }
  EXPECT_NEAR((sup_inf + inf_sup) / 2, phi(x), 1e-12);

  const GridSpec g = GridSpec::cube(2, 40, -1.0, 1.0);
  const auto u = GridField::from_function(g, phi);
  const GridField v = catte_step_2d(u, 0.01);  // half-length 0.2
  for (std::size_t i = 0; i < g.size(); ++i)
    if (Box::cube(2, -0.75, 0.75).contains(g.node(i))) { ASSERT_NEAR(v[i], u[i], 1e-13); }
}

TEST(Catte, MatchesDirectEvaluation) {
  const GridSpec g = GridSpec::cube(2, 24, -1.0, 1.0);
  const auto u = GridField::from_function(g, [](const Vec& x) { return x[0] * x[0] + std::sin(2 * x[1]); });
  const CatteOptions opt{12, 9, 1};
  const double h = 0.02, ell = std::sqrt(4 * h);
  const GridField v = catte_step_2d(u, h, opt);
  for (std::size_t i = 0; i < g.size(); i += 11) {
    const Vec x = g.node(i);
    double sup_inf = -1e300, inf_sup = 1e300;
    for (int j = 0; j < opt.directions; ++j) {
      const double th = std::numbers::pi * j / opt.directions;
      const Vec e{std::cos(th), std::sin(th)};
      double lo = 1e300, hi = -1e300;
      for (int m = 0; m < opt.segment_samples; ++m) {
        const double val = u.sample(x + (-ell + 2 * ell * m / (opt.segment_samples - 1)) * e);
        lo = std::min(lo, val);
        hi = std::max(hi, val);
      }
      sup_inf = std::max(sup_inf, lo);
      inf_sup = std::min(inf_sup, hi);
    }
    EXPECT_NEAR(v[i], (sup_inf + inf_sup) / 2, 1e-13);
  }
}

TEST(Diagnostics, SupportRadius) {
  const GridSpec g = GridSpec::cube(2, 100, -1.0, 1.0);
  EXPECT_EQ(measure_support_radius(GridField(g, std::vector<double>(g.size(), 0.0)), 1e-9), 0.0);
  const auto bump = GridField::from_function(g, [](const Vec& x) { return std::max(0.0, 0.25 - dot(x, x)); });
  EXPECT_NEAR(measure_support_radius(bump, 1e-12), 0.5, g.spacing);
  EXPECT_THROW(measure_support_radius(bump, 0.0), UsageError);
}

// One mean step spreads the support by the stencil radius.
TEST(Diagnostics, SupportGrowsByStencilRadius) {
  const GridSpec g = GridSpec::cube(2, 256, -1.0, 1.0);
  const auto bump = GridField::from_function(g, [](const Vec& x) { return std::max(0.0, 0.25 - dot(x, x)); });
  const double h = 0.01;
  const GridField v = step(bump, {Exponent(2.0), 2, h});
  const double growth = measure_support_radius(v, 1e-12) - measure_support_radius(bump, 1e-12);
  EXPECT_NEAR(growth, std::sqrt(2 * h), g.spacing + 0.02 * std::sqrt(2 * h));
}

TEST(Diagnostics, ZeroLevelRadius) {
  for (int dim : {2, 3}) {
    const GridSpec g = GridSpec::cube(dim, dim == 2 ? 64 : 24, -1.5, 1.5);
    const auto d = GridField::from_function(g, [](const Vec& x) { return norm(x) - 0.7; });
    EXPECT_NEAR(extract_zero_level_radius(d), 0.7, g.spacing);
    const auto q = GridField::from_function(g, [](const Vec& x) { return dot(x, x) - 1.0; });
    EXPECT_NEAR(extract_zero_level_radius(q), 1.0, g.spacing);
  }
  const GridSpec g = GridSpec::cube(2, 32, -1.0, 1.0);
  const auto shifted = GridField::from_function(g, [](const Vec& x) { return std::abs(x[0] - 0.5) - 0.2; });
  const std::string msg = what_of([&] { (void)extract_zero_level_radius(shifted); });
  EXPECT_NE(msg.find("ray -x"), std::string::npos) << msg;
}
