#include <doctest.h>

#include "fqs/config.hpp"
#include "fqs/study.hpp"
#include "fqs/verify.hpp"

using namespace fqs;

namespace {

RunConfig small_bar() {
  return parse_config(R"(
[mesh]
kind = bar
h = 0.1
[load]
profile = [[0, 1, 0]]
schedule = [[0, 0], [2, 2]]
horizon = 2
[solver]
budget = 12
[time]
T = 2
delta = 0.1
)");
}

struct Output {
  Trajectory traj;
  EnergyLedger ledger;
};

Output run(const RunConfig& c) {
  const Problem p = build_problem(c);
  EvolveOptions o;
  o.step = p.step;
  o.checkpoint_every = 0;
  const auto init = initial_configuration(p.mesh, p.density, p.load, p.step);
  auto res = evolve(p.mesh, p.density, p.load, p.grid, init, o);
  return {std::move(res.trajectory), std::move(res.ledger)};
}

}  // namespace

TEST_CASE("probe is right-continuous") {
  EnergyLedger l;
  l.rows = {{0.0, 0, 0, 0, 0, 0}, {0.5, 1, 0, 1, 0, 0}, {1.0, 2, 0, 2, 0, 0}};
  CHECK(probe(l, 0.0).bulk == 0);
  CHECK(probe(l, 0.49).bulk == 0);
  CHECK(probe(l, 0.5).bulk == 1);
  CHECK(probe(l, 0.99).bulk == 1);
  CHECK(probe(l, 1.0).bulk == 2);
  CHECK_THROWS_AS(probe(l, -0.1), Error);
}

TEST_CASE("zero-load study") {
  RunConfig c = small_bar();
  c.load.profile = {{0.0, 0.0, 0.0}};
  const RefinementStudy st = refine_study(c, 3);
  CHECK(st.complete());
  for (const auto& d : st.bulk_difference)
    for (double v : d) CHECK(v == 0.0);
  for (const auto& d : st.surface_difference)
    for (double v : d) CHECK(v == 0.0);
  for (const BalanceRow& r : balance_convergence(st)) {
    CHECK(r.exact);
    CHECK_FALSE(r.rate.has_value());
  }
  CHECK_FALSE(precrack_horizon(st).has_value());
}

TEST_CASE("crack times move down toward the closed form") {
  const RefinementStudy st = refine_study(small_bar(), 4);
  REQUIRE(st.complete());
  double prev = 1e9;
  for (const auto& l : st.levels) {
    const auto tc = first_crack_time(l.ledger);
    REQUIRE(tc);
    CHECK(*tc <= prev);
    CHECK(*tc > 1.0);
    CHECK(*tc <= 1.0 + 0.1 + 1e-12);
    prev = *tc;
  }
  CHECK(precrack_horizon(st) == doctest::Approx(1.0));
  const auto rows = balance_convergence(st, precrack_horizon(st));
  for (std::size_t l = 0; l + 1 < rows.size(); ++l) {
    REQUIRE(rows[l].rate);
    CHECK(*rows[l].rate >= 0.8);
  }
}

TEST_CASE("a failing level is reported, not fatal") {
  const RefinementStudy st = refine_study(
      [](int level) -> LevelRun {
        if (level == 1) throw Error(ErrorKind::Nonconvergence, "synthetic");
        return LevelRun{EnergyLedger{{{0.0, 0, 0, 0, 0, 0}}}, 1.0, 1.0};
      },
      2);
  CHECK_FALSE(st.complete());
  CHECK(st.levels[1].error.find("synthetic") != std::string::npos);
}

TEST_CASE("verifier accepts a clean run and flags tampering") {
  const RunConfig c = small_bar();
  const Output o = run(c);
  const VerifyReport ok = verify_trajectory(o.traj, o.ledger, c);
  for (const auto& chk : ok.checks) {
    INFO(chk.name << ": " << chk.detail);
    CHECK(chk.passed);
  }

  {
    Output bad = o;
    auto& last = bad.traj.knots.back().broken;
    REQUIRE_FALSE(last.empty());
    last.erase(last.begin());
    const VerifyReport r = verify_trajectory(bad.traj, bad.ledger, c);
    CHECK_FALSE(r.find("irreversibility")->passed);
  }
  {
    Output bad = o;
    bad.ledger.rows[5].total += 1e-3;
    const VerifyReport r = verify_trajectory(bad.traj, bad.ledger, c);
    CHECK_FALSE(r.find("ledger-arithmetic")->passed);
  }
  {
    Output bad = o;
    bad.traj.knots[4].broken = {0};  // breaks early at no gain
    const VerifyReport r = verify_trajectory(bad.traj, bad.ledger, c);
    CHECK_FALSE(r.passed());
  }
  {
    Output bad = o;
    bad.ledger.rows.pop_back();
    CHECK_FALSE(verify_trajectory(bad.traj, bad.ledger, c).find("shape")->passed);
  }
}
