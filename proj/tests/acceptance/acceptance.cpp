// Acceptance run: one PASS/FAIL line per criterion at the pinned tolerances.
// Optional arguments select criteria by number, e.g. `statflow_acceptance 1 4`.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "statflow/experiments.hpp"

namespace ex = statflow::experiments;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

ex::RunContext context() {
  ex::RunContext ctx;
  ctx.seed = 42;
  ctx.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return ctx;
}

std::string first_failure(const ex::ExperimentResult& r) { return r.failures.empty() ? "" : "; " + r.failures.front(); }

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Outcome coefficients() {
  ex::ExperimentResult r;
  ex::coefficient_identities(ex::IdentitiesConfig{}, r);
  return {r.pass, "max error " + num(r.summary["max_coefficient_error"]) + first_failure(r)};
}

Outcome consistency() {
  const auto r = ex::run_consistency(ex::ConsistencyConfig{}, context());
  double worst = 0.0;
  int checked = 0, skipped = 0;
  for (const json& c : r.summary["cases"]) {
    if (c["check"] == "skipped") {
      ++skipped;
      continue;
    }
    ++checked;
    if (c.contains("rel_error")) worst = std::max(worst, c["rel_error"].get<double>());
  }
  return {r.pass, std::to_string(checked) + " cases, worst rel error " + num(worst) + ", " + std::to_string(skipped) +
                      " skipped (zero target)" + first_failure(r)};
}

Outcome axioms() {
  const auto r = ex::run_axioms(ex::AxiomsConfig{}, context());
  double worst = 0.0;
  for (const auto& [name, p] : r.summary["properties"].items()) worst = std::max(worst, p["max_violation"].get<double>());
  return {r.pass, "max violation " + num(worst) + first_failure(r)};
}

Outcome heat() {
  const auto r = ex::run_evolve(ex::EvolveConfig{}, context());
  const json& s = r.summary;
  std::string d = "errors";
  for (const json& e : s["errors"]) d += " " + num(e);
  d += ", gap ratios";
  for (const json& g : s["gap_ratios"]) d += " " + num(g);
  return {r.pass, d + first_failure(r)};
}

// The 2-D shrinking-circle run is shared with the Catte cross-check.
ex::ExperimentResult& circle_run() {
  static ex::ExperimentResult r = [] {
    ex::McfConfig c;
    c.catte_directions = 128;
    return ex::run_mcf(c, context());
  }();
  return r;
}

Outcome shrinking_circle() {
  const auto& r2 = circle_run();
  const bool pass2 = r2.summary["rel_error"].get<double>() <= ex::McfConfig{}.rel_tol;
  const auto r3 = ex::run_mcf(ex::McfConfig::sphere_3d(), context());
  return {pass2 && r3.pass, "2D radius " + num(r2.summary["radius"]) + " (" +
                                num(100 * r2.summary["rel_error"].get<double>()) + "%), 3D radius " +
                                num(r3.summary["radius"]) + " (" + num(100 * r3.summary["rel_error"].get<double>()) +
                                "%) vs " + num(r3.summary["exact"]) + first_failure(r3)};
}

Outcome catte() {
  const json& c = circle_run().summary["catte"];
  const double rel = c["rel_to_median"];
  return {rel <= ex::McfConfig{}.catte_rel_tol, "Catte radius " + num(c["radius"]) + ", " + num(100 * rel) +
                                                    "% from the median scheme (" + num(c["directions"]) +
                                                    " directions)"};
}

Outcome extinction() {
  const auto r = ex::run_extinction(ex::ExtinctionConfig{}, context());
  return {r.pass, "final positive sup " + num(r.summary["final_sup_positive"]) + ", " +
                      std::to_string(r.summary["increases"].get<int>()) + " increases" + first_failure(r)};
}

Outcome support() {
  const auto r = ex::run_support(ex::SupportConfig{}, context());
  return {r.pass, "growth " + num(r.summary["growth"]) + " vs " + num(r.summary["expected"]) + " +/- " +
                      num(r.summary["allowed_deviation"]) + first_failure(r)};
}

Outcome dirichlet() {
  const auto r = ex::run_dirichlet(ex::DirichletConfig{}, context());
  return {r.pass, std::to_string(r.summary["steps"].get<int>()) + " steps, interior sup error " +
                      num(r.summary["interior_sup_error"]) + first_failure(r)};
}

Outcome aronsson() {
  const auto r = ex::run_aronsson(ex::AronssonConfig{}, context());
  return {r.pass, "max change / bound " + num(r.summary["max_change_over_bound"]) + first_failure(r)};
}

Outcome decompositions() {
  ex::ExperimentResult r;
  ex::decomposition_identities(ex::IdentitiesConfig{}, context(), r);
  return {r.pass, "max residual " + num(r.summary["max_decomposition_residual"]) + first_failure(r)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "coefficient identities", coefficients},
      {2, "consistency slopes", consistency},
      {3, "operator axioms", axioms},
      {4, "gaussian heat benchmark", heat},
      {5, "shrinking circle and sphere", shrinking_circle},
      {6, "Catte cross-check", catte},
      {7, "finite extinction", extinction},
      {8, "support growth", support},
      {9, "Dirichlet steady state", dirichlet},
      {10, "midrange near-fixed-point", aronsson},
      {11, "decomposition identities", decompositions},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  AC" << c.id << "  " << c.name << ": " << o.detail << "  ["
              << num(secs) << " s]" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failed ? 1 : 0;
}
