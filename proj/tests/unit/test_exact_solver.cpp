#include <doctest.h>

#include <random>

#include "fqs/incremental_solver.hpp"
#include "fqs/oracle.hpp"
#include "support.hpp"

using namespace fqs;

namespace {

StepOptions exact_budget(int budget) {
  StepOptions o;
  o.budget = budget;
  return o;
}

}  // namespace

TEST_CASE("benchmark bar below and above the crack load") {
  const Mesh m = test::unit_bar(101);
  const auto d = EnergyDensity::quadratic();
  const CrackSet none(m, {});

  const auto low = solve_step_exact(m, d, none, test::bar_ends(m, 0.5), 1, exact_budget(102));
  CHECK(low.jump.empty());
  CHECK(low.bulk == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(low.new_surface == 0.0);
  for (int i = 0; i < m.node_count(); ++i) CHECK(low.values[static_cast<std::size_t>(i)] == doctest::Approx(0.5 * m.node_pos(i)[0]));

  const auto high = solve_step_exact(m, d, none, test::bar_ends(m, 2.0), 1, exact_budget(102));
  CHECK(high.jump.size() == 1);
  CHECK(high.bulk <= 1e-20);
  CHECK(high.new_surface == 1.0);
  CHECK(high.energy() == doctest::Approx(1.0).epsilon(1e-15));
  // Ties between the 102 single cuts go to the smallest bond id.
  CHECK(high.jump == std::vector<BondId>{0});
}

TEST_CASE("a prior cut releases the bar for free") {
  const Mesh m = test::unit_bar(21);
  const auto d = EnergyDensity::quadratic();
  const CrackSet cut(m, {7});
  for (double s : {0.3, 5.0}) {
    const auto r = solve_step_exact(m, d, cut, test::bar_ends(m, s), 1, exact_budget(30));
    CHECK(r.jump.empty());
    CHECK(r.bulk <= 1e-20);
    CHECK(r.new_surface == 0.0);
  }
}

TEST_CASE("budget refusal") {
  const Mesh m = test::unit_bar(101);
  const auto d = EnergyDensity::quadratic();
  try {
    solve_step_exact(m, d, CrackSet(m, {}), test::bar_ends(m, 0.5), 1, exact_budget(20));
    FAIL("expected a budget refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BudgetExceeded);
  }
}

TEST_CASE("tie rule") {
  const std::vector<BondId> a{1, 4}, b{2, 3}, c{5};
  CHECK(preferred(1.0, 2.0, a, 1.0, 2.0, b, 1e-12));
  CHECK_FALSE(preferred(1.0, 2.0, b, 1.0, 2.0, a, 1e-12));
  CHECK(preferred(1.0, 1.0, c, 1.0, 2.0, a, 1e-12));
  CHECK(preferred(0.5, 3.0, b, 1.0, 1.0, c, 1e-12));
  CHECK(preferred(1.0 + 1e-14, 1.0, c, 1.0, 2.0, a, tie_tolerance(1.0)));
}

TEST_CASE("exact step agrees with enumeration on small instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(u(rng) * 8);
    const Mesh m = test::unit_bar(n, 1.0, 0.2 + u(rng));
    const auto d = trial % 3 == 0 ? EnergyDensity::p_power(3.0, 1.0, 1.0) : EnergyDensity::quadratic();
    const auto g = test::bar_ends(m, 2.0 * u(rng));
    const CrackSet prev(m, {});
    const auto e = solve_step_exact(m, d, prev, g, 1, exact_budget(20));
    const auto o = brute_force_step(m, d, prev, g, 1);
    CHECK(e.jump == o.jump);
    CHECK(e.energy() == doctest::Approx(o.energy()).epsilon(1e-9));
  }
}

TEST_CASE("own-jump residual of exact steps") {
  const Mesh m = test::unit_bar(11);
  const auto d = EnergyDensity::quadratic();
  for (double s : {0.0, 0.9, 1.2}) {
    const CrackSet prev(m, {});
    const auto g = test::bar_ends(m, s);
    const auto st = solve_step_exact(m, d, prev, g, 1, exact_budget(20));
    const double r = verify_own_jump_minimality(m, d, st, prev, g, exact_budget(20));
    CHECK(r >= -1e-12);
    CHECK(r <= 1e-10);
  }
  const CrackSet cut(m, {3});
  const auto g = test::bar_ends(m, 4.0);
  const auto st = solve_step_exact(m, d, cut, g, 1, exact_budget(20));
  CHECK(verify_own_jump_minimality(m, d, st, cut, g, exact_budget(20)) == 0.0);
}
