// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is nonzero when any criterion fails, except those named with
// --known-failures (their FAIL lines are still printed).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fqs/config.hpp"
#include "fqs/elastic_solver.hpp"
#include "fqs/evolution.hpp"
#include "fqs/incremental_solver.hpp"
#include "fqs/kernels.hpp"
#include "fqs/oracle.hpp"
#include "fqs/study.hpp"
#include "fqs/text_format.hpp"
#include "fqs/verify.hpp"

#ifndef FQS_SOURCE_DIR
#define FQS_SOURCE_DIR "."
#endif

using namespace fqs;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kInequalityTol = 1e-8;    // criteria 2 and 7 (surface budget)
constexpr double kBenchmarkTol = 1e-8;     // criterion 1, total vs t^2
constexpr double kRateFloor = 0.8;         // criterion 3
constexpr double kOwnJumpExactTol = 1e-8;  // criterion 6, exact backend
constexpr double kOwnJumpAltFactor = 10;   // criterion 6, altmin: factor times solver tolerance
constexpr double kOracleEnergyTol = 1e-9;  // criterion 5, relative; broken sets must match exactly
constexpr double kTrendSlack = 1e-12;      // criterion 8, floating noise in "nonincreasing"
constexpr double kBulkFraction = 0.02;     // criterion 9
constexpr double kLocationFactor = 2.0;    // criterion 9, in units of h

constexpr int kFuzzRuns = 200;
constexpr int kOracleInstances = 200;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

int failures = 0, excused = 0;
std::set<int> known_failures;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  const bool known = !pass && known_failures.count(id) > 0;
  if (!pass) ++(known ? excused : failures);
  std::printf("%s [%d] %s: %s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(),
              known ? " [known failure]" : "");
  std::fflush(stdout);
}

struct RunOutput {
  std::optional<Problem> problem;
  Trajectory traj;
  EnergyLedger ledger;
  double seconds = 0.0;
};

RunOutput run(const RunConfig& cfg, int level = 0) {
  const auto t0 = Clock::now();
  Problem pr = build_problem(cfg, level);
  EvolveOptions opts;
  opts.step = pr.step;
  opts.checkpoint_every = 0;
  const auto init = initial_configuration(pr.mesh, pr.density, pr.load, pr.step);
  EvolutionResult res = evolve(pr.mesh, pr.density, pr.load, pr.grid, init, opts);
  return {std::move(pr), std::move(res.trajectory), std::move(res.ledger), seconds_since(t0)};
}

std::vector<BondId> jump_between(const std::vector<BondId>& before, const std::vector<BondId>& after) {
  std::vector<BondId> j;
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(), std::back_inserter(j));
  return j;
}

bool irreversible(const Trajectory& t) {
  for (std::size_t k = 1; k < t.knots.size(); ++k) {
    const auto& a = t.knots[k - 1].broken;
    const auto& b = t.knots[k].broken;
    if (!std::includes(b.begin(), b.end(), a.begin(), a.end())) return false;
  }
  return true;
}

/// Largest own-jump residual over the knots of a run.
double own_jump_residual(const RunOutput& r) {
  const Problem& p = *r.problem;
  const int m = p.load.components();
  double worst = 0.0;
  for (std::size_t k = 1; k < r.traj.knots.size(); ++k) {
    const Knot& prev = r.traj.knots[k - 1];
    const Knot& cur = r.traj.knots[k];
    DisplacementState st;
    st.components = m;
    st.values = cur.values;
    st.jump = jump_between(prev.broken, cur.broken);
    const auto g = p.load.boundary_values(p.mesh, cur.t);
    worst = std::max(worst, verify_own_jump_minimality(p.mesh, p.density, st, CrackSet(p.mesh, prev.broken), g, p.step));
  }
  return worst;
}

/// Growth lower and upper bounds give, for any global minimiser u of the step
/// compared against the lifted data,
///   (1/C)|grad u|_p^p - C V <= bulk(u) <= bulk(g) <= C |grad g|_p^p + C V,
/// so |grad u|_p <= C^{2/p} |grad g|_p + (2 C^2 V)^{1/p} <= C_ape (|grad g|_p + 1).
double apriori_constant(const EnergyDensity& d, double volume) {
  const double C = d.growth_c(), p = d.p();
  return std::max(std::pow(C, 2.0 / p), std::pow(2.0 * C * C * volume, 1.0 / p));
}

struct AprioriResult {
  double worst_ratio = 0.0;  // |grad u|_p / (C_ape (|grad g|_p + 1))
  double worst_linf_excess = -INFINITY;
};

AprioriResult apriori(const RunOutput& r) {
  const Problem& p = *r.problem;
  const Mesh& mesh = p.mesh;
  const int m = p.load.components();
  const double cape = apriori_constant(p.density, mesh.total_volume());
  const auto base_mult = sharp_multipliers(mesh, mesh.initial_crack());
  AprioriResult out;
  for (const Knot& k : r.traj.knots) {
    const auto g = p.load.boundary_values(mesh, k.t);
    const auto mult = sharp_multipliers(mesh, k.broken);
    const double gu = gradient_p_norm({&mesh, &p.density, m, mult, g, std::nullopt}, k.values, p.density.p());
    const auto lift = p.load.lift(mesh, k.t);
    const double gg = gradient_p_norm({&mesh, &p.density, m, base_mult, g, std::nullopt}, lift, p.density.p());
    out.worst_ratio = std::max(out.worst_ratio, gu / (cape * (gg + 1.0)));
    if (p.step.truncation_bound) {
      double linf = 0.0;
      for (double v : k.values) linf = std::max(linf, std::abs(v));
      out.worst_linf_excess = std::max(out.worst_linf_excess, linf - *p.step.truncation_bound);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fuzzed small configurations (exact backend, at most 12 candidate bonds).

RunConfig fuzz_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](int n) { return static_cast<int>(u(rng) * n) % n; };
  RunConfig c;
  c.solver.backend = Backend::Exact;
  c.solver.budget = 12;

  int m = 1;
  switch (pick(4)) {
    case 0:
    case 1: {
      c.mesh.kind = "bar";
      c.mesh.length = std::array{0.5, 1.0, 2.0}[pick(3)];
      const int nodes = 3 + pick(9);  // <= 11 nodes: <= 12 candidates
      c.mesh.h = c.mesh.length / (nodes - 1);
      c.mesh.dirichlet = {Side::Left, Side::Right};
      break;
    }
    case 2: {
      c.mesh.kind = "rect";
      c.mesh.width = 1.0;
      c.mesh.height = pick(2) ? 1.0 : 0.5;
      c.mesh.h = 0.5;
      std::vector<Side> sides{Side::Left, Side::Right, Side::Bottom, Side::Top};
      std::shuffle(sides.begin(), sides.end(), rng);
      sides.resize(static_cast<std::size_t>(1 + pick(4)));
      c.mesh.dirichlet = sides;
      m = 1 + pick(2);
      break;
    }
    default: {
      c.mesh.kind = "rect";
      c.mesh.h = 0.25;
      c.mesh.notch = {0.0, 0.5, 0.25 * (1 + pick(2)), 0.5};
      c.mesh.breakable = BreakableSet::NotchLine;
      c.mesh.dirichlet = pick(2) ? std::vector<Side>{Side::Bottom, Side::Top}
                                 : std::vector<Side>{Side::Bottom, Side::Top, Side::Right};
      m = 1 + pick(2);
      break;
    }
  }
  c.mesh.kappa = 0.2 + 1.8 * u(rng);

  switch (pick(3)) {
    case 0: break;  // quadratic
    case 1: {
      const double a = 0.5 + 1.5 * u(rng);
      c.w = {"scaled-quadratic", 2.0, a, std::max(a, 1.0 / a)};
      break;
    }
    default: {
      const double p = pick(2) ? 1.5 : 3.0;
      const double a = 0.5 + u(rng);
      c.w = {"p-power", p, a, std::max(a, 1.0 / a)};
      break;
    }
  }

  for (int comp = 0; comp < m; ++comp)
    c.load.profile.push_back({u(rng) - 0.5, 2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0});
  double t = 0.0;
  c.load.schedule = {{0.0, 0.0}};
  const int pieces = 1 + pick(3);
  for (int i = 0; i < pieces; ++i) {
    t += 0.5 + u(rng);
    c.load.schedule.push_back({t, 4.0 * u(rng) - 2.0});
  }
  c.load.horizon = t;
  c.time.T = t;
  c.time.delta = t / (6 + pick(7));
  c.solver.truncate = m == 1 && pick(2);
  return c;
}

// ---------------------------------------------------------------------------

struct SuiteRun {
  RunOutput out;
  double ineq = 0.0, budget = 0.0, own = 0.0;
  bool irreversible = true;
  AprioriResult bounds;
  bool verified = true;
};

SuiteRun audit(RunOutput out) {
  SuiteRun s;
  s.out = std::move(out);
  const InequalityReport ir = check_energy_inequality(s.out.ledger, kInequalityTol);
  s.ineq = ir.max_residual;
  s.budget = ir.max_budget_excess;
  s.irreversible = irreversible(s.out.traj);
  s.own = own_jump_residual(s.out);
  s.bounds = apriori(s.out);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-failures" && i + 1 < argc) {
      std::stringstream ids(argv[++i]);
      for (std::string id; std::getline(ids, id, ',');) known_failures.insert(std::stoi(id));
    } else {
      std::fprintf(stderr, "usage: acceptance [--known-failures id[,id...]]\n");
      return 2;
    }
  }
  apply_thread_cap();
  const auto t_all = Clock::now();
  const std::string src = FQS_SOURCE_DIR;
  const RunConfig bench_cfg = load_config(src + "/configs/bar_benchmark.cfg");
  std::vector<SuiteRun> suite;

  // 1. Crack time of the stretched bar.
  {
    SuiteRun b = audit(run(bench_cfg));
    const auto tc = first_crack_time(b.out.ledger);
    double pre = 0.0, post = 0.0;
    for (const LedgerRow& r : b.out.ledger.rows) {
      if (tc && r.t >= *tc) post = std::max(post, std::abs(r.total - 1.0));
      else pre = std::max(pre, std::abs(r.total - r.t * r.t));
    }
    const bool ok = tc && *tc >= 1.0 && *tc <= 1.01 && pre <= kBenchmarkTol && post <= kBenchmarkTol && b.out.seconds < 10.0;
    report(1, "crack-time benchmark", ok,
           "t_c = " + (tc ? format_double(*tc) : std::string("none")) + " (want [1.00, 1.01]), max |total - t^2| before " +
               fmt(pre) + ", max |total - 1| after " + fmt(post) + " (tol " + fmt(kBenchmarkTol) + "), " +
               fmt(b.out.seconds) + " s (limit 10 s)");
    suite.push_back(std::move(b));
  }

  // Fuzzed suite shared by criteria 2, 4, 6 and 7.
  const auto t_fuzz = Clock::now();
  int fuzz_errors = 0;
  {
    std::mt19937_64 rng(20240601);
    std::vector<RunConfig> cfgs;
    for (int i = 0; i < kFuzzRuns; ++i) cfgs.push_back(fuzz_config(rng));
    std::vector<SuiteRun> fuzzed(cfgs.size());
    std::vector<std::string> errors(cfgs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
      try {
        fuzzed[i] = audit(run(cfgs[i]));
        fuzzed[i].verified = verify_trajectory(fuzzed[i].out.traj, fuzzed[i].out.ledger, cfgs[i]).passed();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
      if (!errors[i].empty()) {
        std::printf("note: fuzz run %zu failed: %s\n%s", i, errors[i].c_str(), render_config(cfgs[i]).c_str());
        ++fuzz_errors;
        continue;
      }
      suite.push_back(std::move(fuzzed[i]));
    }
  }
  const double fuzz_seconds = seconds_since(t_fuzz);

  // 2. Discrete energy inequality.
  {
    int fuzz = 0, bad = 0;
    double worst = -INFINITY;
    for (std::size_t i = 0; i < suite.size(); ++i) {
      if (i > 0) ++fuzz;
      worst = std::max(worst, suite[i].ineq);
      if (suite[i].ineq > kInequalityTol) ++bad;
    }
    report(2, "discrete energy inequality", bad == 0 && fuzz >= kFuzzRuns && fuzz_errors == 0,
           std::to_string(suite.size()) + " runs (" + std::to_string(fuzz) + " fuzzed, " + std::to_string(fuzz_errors) +
               " aborted), max total - total(0) - work_cum = " +
               fmt(worst) + " (tol " + fmt(kInequalityTol) + "), " + std::to_string(bad) + " violations, " +
               fmt(fuzz_seconds) + " s");
  }

  // 3. Energy balance convergence on the benchmark, Delta = 1/25 .. 1/200.
  RefinementStudy bar_study;
  double bar_study_seconds = 0.0;
  {
    RunConfig c = bench_cfg;
    c.time.delta = 1.0 / 25.0;
    const auto t0 = Clock::now();
    bar_study = refine_study(c, 4);
    bar_study_seconds = seconds_since(t0);
    const auto until = precrack_horizon(bar_study);
    const auto rows = balance_convergence(bar_study, until);
    bool ok = bar_study.complete() && until.has_value() && bar_study_seconds < 60.0;
    std::ostringstream d;
    d << "pre-crack segment t <= " << (until ? format_double(*until) : std::string("?")) << ", residuals";
    for (const auto& r : rows) d << ' ' << fmt(r.residual);
    d << ", rates";
    for (std::size_t l = 0; l + 1 < rows.size(); ++l) {
      const bool have = rows[l].rate.has_value();
      d << ' ' << (have ? fmt(*rows[l].rate) : std::string("n/a"));
      if (!have || *rows[l].rate < kRateFloor) ok = false;
    }
    d << " (floor " << kRateFloor << "), " << fmt(bar_study_seconds) << " s (limit 60 s)";
    report(3, "energy balance convergence", ok, d.str());
  }

  // 4. Irreversibility, plus tampered trajectories the verifier must reject.
  {
    int bad = 0;
    for (const auto& s : suite)
      if (!s.irreversible) ++bad;
    int unverified = 0;
    for (std::size_t i = 1; i < suite.size(); ++i)
      if (!suite[i].verified) ++unverified;

    const RunOutput& b = suite[0].out;
    int caught = 0, tampered = 0;
    auto expect_flag = [&](Trajectory t, EnergyLedger l, const char* check) {
      ++tampered;
      const VerifyReport r = verify_trajectory(t, l, bench_cfg);
      const CheckResult* c = r.find(check);
      if (c && !c->passed) ++caught;
    };
    const std::size_t last = b.traj.knots.size() - 1;
    {
      Trajectory t = b.traj;
      t.knots[last].broken.clear();  // healed crack at the final knot
      expect_flag(t, b.ledger, "irreversibility");
    }
    {
      Trajectory t = b.traj;
      std::swap(t.knots[last].broken, t.knots[50].broken);  // crack appears early, then heals
      expect_flag(t, b.ledger, "irreversibility");
    }
    {
      EnergyLedger l = b.ledger;
      l.rows[120].total += 1e-6;
      expect_flag(b.traj, l, "ledger-arithmetic");
    }
    {
      Trajectory t = b.traj;
      t.knots.pop_back();
      expect_flag(t, b.ledger, "shape");
    }
    const bool clean = verify_trajectory(b.traj, b.ledger, bench_cfg).passed();
    report(4, "irreversibility", bad == 0 && caught == tampered && clean && unverified == 0,
           std::to_string(suite.size()) + " runs with Gamma_k subset of Gamma_k+1 at every knot: " +
               std::to_string(suite.size() - static_cast<std::size_t>(bad)) + "; tampered outputs flagged " +
               std::to_string(caught) + "/" + std::to_string(tampered) + "; untampered benchmark verifies " +
               (clean ? "clean" : "DIRTY") + "; fuzzed runs failing the verifier " + std::to_string(unverified));
  }

  // 5. Exact step against plain enumeration.
  {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Instance {
      Mesh mesh;
      EnergyDensity density;
      CrackSet prev;
      std::vector<double> g;
      int m;
    };
    std::vector<Instance> inst;
    while (static_cast<int>(inst.size()) < kOracleInstances) {
      const int kind = static_cast<int>(u(rng) * 3);
      Mesh mesh = kind == 0 ? Mesh::bar(1.0, 3 + static_cast<int>(u(rng) * 9), 0.3 + u(rng), BoundarySpec{{Side::Left, Side::Right}})
                  : kind == 1 ? Mesh::rect(1.0, 1.0, 0.5, 0.3 + u(rng))
                              : Mesh::rect(1.0, 0.5, 0.5, 0.3 + u(rng), BoundarySpec{{Side::Left, Side::Top}});
      const int m = mesh.dimension() == 2 && u(rng) < 0.5 ? 2 : 1;
      EnergyDensity d = u(rng) < 0.6 ? EnergyDensity::quadratic() : EnergyDensity::p_power(u(rng) < 0.5 ? 1.5 : 3.0, 1.0, 1.0);
      std::vector<BondId> prev = mesh.initial_crack();
      for (BondId id : mesh.breakable_bonds())
        if (u(rng) < 0.15) prev.push_back(id);
      CrackSet gamma(mesh, prev);
      if (candidate_bonds(mesh, gamma).size() > 12) continue;
      std::vector<double> g(static_cast<std::size_t>(mesh.bond_count() * m), 0.0);
      for (BondId id = 0; id < mesh.bond_count(); ++id)
        if (mesh.bond(id).is_ghost())
          for (int c = 0; c < m; ++c) g[static_cast<std::size_t>(id * m + c)] = 3.0 * u(rng) - 1.5;
      inst.push_back({std::move(mesh), std::move(d), std::move(gamma), std::move(g), m});
    }
    int mismatches = 0;
    double worst = 0.0;
    int cracked = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : mismatches, cracked) reduction(max : worst)
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const Instance& x = inst[i];
      StepOptions o;
      o.budget = 12;
      const DisplacementState e = solve_step_exact(x.mesh, x.density, x.prev, x.g, x.m, o);
      const OracleStep b = brute_force_step(x.mesh, x.density, x.prev, x.g, x.m);
      const double diff = std::abs(e.energy() - b.energy()) / std::max(1.0, std::abs(b.energy()));
      worst = std::max(worst, diff);
      if (diff > kOracleEnergyTol || e.jump != b.jump) ++mismatches;
      if (!b.jump.empty()) ++cracked;
    }
    const double secs = seconds_since(t0);
    report(5, "oracle equivalence", mismatches == 0 && secs < 120.0,
           std::to_string(inst.size()) + " instances (<= 12 candidates, " + std::to_string(cracked) +
               " with new cracks), mismatches " + std::to_string(mismatches) + ", max relative energy gap " + fmt(worst) +
               " (tol " + fmt(kOracleEnergyTol) + ", broken sets compared exactly), " + fmt(secs) + " s (limit 120 s)");
  }

  // 6 and 9 share the phase-field benchmark runs at h = 1/400.
  RunConfig alt_cfg = bench_cfg;
  alt_cfg.mesh.h = 1.0 / 400.0;
  alt_cfg.solver.budget = 402;
  alt_cfg.time.delta = 0.05;
  RunConfig exact400 = alt_cfg;
  alt_cfg.solver.backend = Backend::AltMin;
  alt_cfg.solver.at_epsilon_over_h = 4.0;
  RunOutput alt_run, exact_run;
  std::string alt_error;
  double alt_own = 0.0;
  try {
    alt_run = run(alt_cfg);
    exact_run = run(exact400);
    alt_own = own_jump_residual(alt_run);
  } catch (const std::exception& e) {
    alt_error = e.what();
  }

  // 6. Minimiser for its own jump set.
  {
    double exact_worst = 0.0;
    for (const auto& s : suite) exact_worst = std::max(exact_worst, s.own);
    const double alt_tol = kOwnJumpAltFactor * alt_cfg.solver.tolerance;
    const bool ok = exact_worst <= kOwnJumpExactTol && alt_error.empty() && alt_own <= alt_tol;
    report(6, "own-jump minimality", ok,
           "exact: max residual " + fmt(exact_worst) + " over " + std::to_string(suite.size()) + " runs (tol " +
               fmt(kOwnJumpExactTol) + "); altmin bar h = 1/400: max residual " +
               (alt_error.empty() ? fmt(alt_own) : "error: " + alt_error) + " (tol " + fmt(alt_tol) + ")" +
               (alt_own > alt_tol ? "; the diffuse band still carries stress at nucleation, so the intact part keeps "
                                    "elastic energy of order h^2"
                                  : ""));
  }

  // 7. A priori bounds.
  {
    double ratio = 0.0, linf = -INFINITY, budget = -INFINITY;
    int truncated = 0;
    for (const auto& s : suite) {
      ratio = std::max(ratio, s.bounds.worst_ratio);
      budget = std::max(budget, s.budget);
      if (s.out.problem->step.truncation_bound) {
        ++truncated;
        linf = std::max(linf, s.bounds.worst_linf_excess);
      }
    }
    const bool ok = ratio <= 1.0 && (truncated == 0 || linf <= 0.0) && budget <= kInequalityTol && truncated > 0;
    report(7, "a priori bounds", ok,
           "max |grad u|_p / (C_ape (|grad g|_p + 1)) = " + fmt(ratio) + " (<= 1), " + std::to_string(truncated) +
               " truncated runs with max |u|_inf - sup|g| = " + fmt(linf) + " (<= 0 exactly), max surface_c - total(0) - work_cum = " +
               fmt(budget) + " (tol " + fmt(kInequalityTol) + ")");
  }

  // 8. Refinement trends.
  {
    const auto t0 = Clock::now();
    bool mono = bar_study.complete();
    int probes = 0;
    for (std::size_t p = 0; p + 1 < bar_study.bulk_difference.size(); ++p)
      for (std::size_t i = 0; i < bar_study.bulk_difference[p].size(); ++i) {
        ++probes;
        if (bar_study.bulk_difference[p + 1][i] > bar_study.bulk_difference[p][i] + kTrendSlack ||
            bar_study.surface_difference[p + 1][i] > bar_study.surface_difference[p][i] + kTrendSlack)
          mono = false;
      }
    std::string d2;
    bool dec = false;
    try {
      const RunConfig sq = load_config(src + "/configs/notched_square.cfg");
      const RefinementStudy st = refine_study(sq, 3);
      if (!st.complete()) throw std::runtime_error("a level failed");
      std::vector<double> sT;
      for (const auto& l : st.levels) sT.push_back(l.ledger.rows.back().surface_c);
      const double d01 = std::abs(sT[0] - sT[1]), d12 = std::abs(sT[1] - sT[2]);
      dec = d12 < d01;
      d2 = "surface_c(T) " + format_double(sT[0]) + ", " + format_double(sT[1]) + ", " + format_double(sT[2]) +
           " with differences " + format_double(d01) + " > " + format_double(d12);
    } catch (const std::exception& e) {
      d2 = std::string("error: ") + e.what();
    }
    const double secs = bar_study_seconds + seconds_since(t0);
    report(8, "refinement trend", mono && dec && secs < 300.0,
           "bar, 4 levels: differences nonincreasing at all " + std::to_string(probes) + " probe pairs " +
               (mono ? "yes" : "NO") + " (slack " + fmt(kTrendSlack) + "); notched square, 3 levels: " + d2 + "; " +
               fmt(secs) + " s (limit 300 s). Cauchy trends only, not a convergence proof");
  }

  // 9. Phase field against exact at h = 1/400.
  {
    bool ok = alt_error.empty();
    std::ostringstream d;
    if (!ok) {
      d << "error: " << alt_error;
    } else {
      // Compare away from the crack load, where the two models may legitimately
      // take different branches of a near tie: knots with |t^2 - kappa L| >= 0.1.
      const double h = alt_run.problem->mesh.h();
      double worst = 0.0;
      int compared = 0;
      for (std::size_t k = 0; k < exact_run.ledger.rows.size(); ++k) {
        const double t = exact_run.ledger.rows[k].t;
        if (std::abs(t * t - 1.0) < 0.1) continue;
        const double test_energy = std::max(t * t, 1e-300);
        const double gap = std::abs(alt_run.ledger.rows[k].bulk - exact_run.ledger.rows[k].bulk);
        if (t > 0.0) worst = std::max(worst, gap / test_energy);
        ++compared;
      }
      const Mesh& mesh = alt_run.problem->mesh;
      const auto& ea = exact_run.traj.knots.back().broken;
      const auto& aa = alt_run.traj.knots.back().broken;
      double far = 0.0;
      for (BondId a : aa) {
        double best = INFINITY;
        for (BondId e : ea) best = std::min(best, std::abs(mesh.bond_midpoint(a)[0] - mesh.bond_midpoint(e)[0]));
        far = std::max(far, best);
      }
      for (BondId e : ea) {
        double best = INFINITY;
        for (BondId a : aa) best = std::min(best, std::abs(mesh.bond_midpoint(a)[0] - mesh.bond_midpoint(e)[0]));
        far = std::max(far, best);
      }
      const bool both = !ea.empty() && !aa.empty();
      ok = worst <= kBulkFraction && both && far <= kLocationFactor * h;
      d << compared << " knots compared, max |bulk_alt - bulk_exact| / t^2 = " << fmt(worst) << " (tol " << kBulkFraction
        << "); crack bonds " << (both ? "" : "MISSING ") << "within " << fmt(far / h) << " h of each other (tol "
        << kLocationFactor << " h); altmin " << fmt(alt_run.seconds) << " s, exact " << fmt(exact_run.seconds) << " s";
    }
    report(9, "altmin vs exact", ok, d.str());
  }

  std::printf("%d criteria failed (%d more listed as known failures), %.1f s total\n", failures, excused,
              seconds_since(t_all));
  return failures == 0 ? 0 : 1;
}
