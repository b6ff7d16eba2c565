#include <gtest/gtest.h>

#include <sstream>

#include "statflow/experiments.hpp"

using namespace statflow;
using namespace statflow::experiments;
using nlohmann::json;

TEST(Config, RoundTripAndDefaults) {
  const json j = to_json(ConsistencyConfig{});
  EXPECT_EQ(j["p"].back(), "inf");
  EXPECT_EQ(j["rungs"], 8);
  const auto back = from_json<ConsistencyConfig>(j);
  EXPECT_EQ(to_json(back), j);
  const auto partial = from_json<EvolveConfig>(json{{"cells", 64}, {"steps", {4, 8}}});
  EXPECT_EQ(partial.cells, 64);
  EXPECT_EQ(partial.steps, (std::vector<int>{4, 8}));
  EXPECT_EQ(partial.t, EvolveConfig{}.t);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(from_json<SupportConfig>(json{{"bogus", 1}}), UsageError);
  EXPECT_THROW(from_json<SupportConfig>(json{{"h", "big"}}), UsageError);
  EXPECT_THROW(from_json<SupportConfig>(json::array()), UsageError);
  EXPECT_THROW(from_json<EvolveConfig>(json{{"steps", {4, 6}}}), UsageError);
  EXPECT_THROW(from_json<EvolveConfig>(json{{"interpolation", "spline"}}), UsageError);
  EXPECT_THROW(from_json<AxiomsConfig>(json{{"p", {0.5}}}), UsageError);
}

TEST(Config, ExponentsAcceptStringsAndNumbers) {
  const auto c = from_json<AxiomsConfig>(json{{"p", {1, "1.5", "inf"}}});
  ASSERT_EQ(c.p.size(), 3u);
  EXPECT_EQ(c.p[1].value(), 1.5);
  EXPECT_TRUE(c.p[2].is_infinite());
}

TEST(Table, CsvQuotingAndLineEndings) {
  Table t{"t", {"a", "b"}, {}};
  t.add(std::string("x,y"), 1.0);
  t.add(std::string("say \"hi\""), 3);
  std::ostringstream os;
  t.write_csv(os);
  EXPECT_EQ(os.str(), "a,b\r\n\"x,y\",1\r\n\"say \"\"hi\"\"\",3\r\n");
  EXPECT_EQ(Table::cell(0.1), "0.10000000000000001");
}

TEST(ExperimentConfigTest, RoundTripAndValidation) {
  ExperimentConfig c;
  c.command = "support";
  c.params = {{"h", 0.02}};
  c.context.seed = 7;
  c.context.snapshots = {1, 3};
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.resolved_params()["h"], 0.02);
  EXPECT_EQ(back.resolved_params()["cells"], 256);

  json bad = c.to_json();
  bad["extra"] = true;
  EXPECT_THROW(ExperimentConfig::from_json(bad), UsageError);
  bad = c.to_json();
  bad["command"] = "nope";
  EXPECT_THROW(ExperimentConfig::from_json(bad), UsageError);
  bad = c.to_json();
  bad["params"]["bogus"] = 1;
  EXPECT_THROW(ExperimentConfig::from_json(bad), UsageError);
}

TEST(Drivers, IdentitiesPass) {
  const auto r = run_identities(IdentitiesConfig{}, RunContext{});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.summary["max_coefficient_error"], 0.0);
  EXPECT_LT(r.summary["max_decomposition_residual"].get<double>(), 1e-10);
  EXPECT_EQ(r.tables.size(), 2u);
}

TEST(Drivers, ConsistencySmall) {
  ConsistencyConfig c;
  c.p = {Exponent(2.0), Exponent::infinity()};
  c.dims = {2};
  c.rungs = 5;
  c.order_samples_2d = 1 << 12;
  c.rel_tol = 0.05;
  const auto r = run_consistency(c, RunContext{});
  EXPECT_TRUE(r.pass) << (r.failures.empty() ? "" : r.failures.front());
  bool skipped = false;
  for (const json& k : r.summary["cases"]) skipped = skipped || k["check"] == "skipped";
  EXPECT_TRUE(skipped);  // distance at p = inf has zero target
}

TEST(Drivers, EvolveReportsErrorsAndGaps) {
  EvolveConfig c;
  c.cells = 64;
  c.steps = {4, 8, 16};
  c.max_error = 1.0;
  c.gap_ratio_tol = 10.0;
  const auto r = run_evolve(c, RunContext{1, 1, {2}});
  EXPECT_TRUE(r.pass) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_EQ(r.summary["errors"].size(), 3u);
  EXPECT_EQ(r.summary["gaps"].size(), 2u);
  EXPECT_EQ(r.summary["gap_ratios"].size(), 1u);
  EXPECT_EQ(r.grids.size(), 6u);
}

TEST(Drivers, McfSmall) {
  McfConfig c;
  c.cells = 96;
  c.steps = 24;
  c.rel_tol = 0.1;
  c.catte_directions = 16;
  c.catte_rel_tol = 1.0;
  const auto r = run_mcf(c, RunContext{});
  EXPECT_TRUE(r.pass) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_NEAR(r.summary["exact"].get<double>(), std::sqrt(0.4), 1e-15);
  EXPECT_TRUE(r.summary.contains("catte"));
}

TEST(Drivers, ExtinctionSupportDirichletAronsson) {
  ExtinctionConfig e;
  e.cells = 64;
  e.steps = 16;
  e.threshold = 1e-2;
  auto r = run_extinction(e, RunContext{});
  EXPECT_TRUE(r.pass) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_EQ(r.summary["increases"], 0);

  SupportConfig s;
  r = run_support(s, RunContext{});
  EXPECT_TRUE(r.pass) << (r.failures.empty() ? "" : r.failures.front());

  DirichletConfig d;
  d.cells = 48;
  d.h = 0.04;
  d.max_error = 0.1;
  r = run_dirichlet(d, RunContext{});
  EXPECT_TRUE(r.pass) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_GT(r.summary["distinct_radii"].get<int>(), 1);

  r = run_aronsson(AronssonConfig{}, RunContext{});
  EXPECT_TRUE(r.pass);
  AronssonConfig tight;
  tight.coefficient = 1e-12;
  EXPECT_FALSE(run_aronsson(tight, RunContext{}).pass);
}

TEST(Drivers, AxiomsHoldAndAreSeeded) {
  AxiomsConfig c;
  c.trials = 12;
  const auto a = run_axioms(c, RunContext{42, 1, {}});
  EXPECT_TRUE(a.pass) << (a.failures.empty() ? "" : a.failures.front());
  EXPECT_EQ(a.summary["properties"].size(), 6u);
  const auto b = run_axioms(c, RunContext{42, 2, {}});
  EXPECT_EQ(a.summary, b.summary);
}

TEST(Dispatch, RunAndReport) {
  ExperimentConfig c;
  c.command = "aronsson";
  const auto r = run(c);
  const json rep = report(c, r);
  EXPECT_EQ(rep["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(rep["pass"], true);
  EXPECT_EQ(rep["config"]["params"]["coefficient"], 5.0);
  EXPECT_EQ(commands().size(), 9u);
}
