#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fqs/elastic_solver.hpp"
#include "fqs/evolution.hpp"
#include "support.hpp"

using namespace fqs;

namespace {

struct Run {
  Mesh mesh;
  EnergyDensity density = EnergyDensity::quadratic();
  LoadProgram load;
  TimeGrid grid;
  EvolveOptions opts;

  Run(Mesh m, LoadProgram l, TimeGrid g, int budget) : mesh(std::move(m)), load(std::move(l)), grid(std::move(g)) {
    opts.step.budget = budget;
    opts.checkpoint_every = 0;
  }
  EvolutionResult go(const Checkpoint* resume = nullptr) const {
    InitialConfiguration init;
    if (!resume) init = initial_configuration(mesh, density, load, opts.step);
    return evolve(mesh, density, load, grid, init, opts, resume);
  }
};

Run benchmark(double delta_steps = 200) {
  return Run(test::unit_bar(101), test::bar_ramp(1.0, Schedule::ramp(1.0, 2.0), 2.0),
             TimeGrid::uniform(2.0, static_cast<int>(delta_steps)), 102);
}

}  // namespace

TEST_CASE("time grids") {
  const TimeGrid a = TimeGrid::dyadic(2.0, 50, 0), b = TimeGrid::dyadic(2.0, 50, 2);
  CHECK(a.steps() == 50);
  CHECK(b.steps() == 200);
  CHECK(a.nested_in(b));
  CHECK_FALSE(b.nested_in(a));
  CHECK(b.horizon() == 2.0);
  CHECK(a.mesh_size() == doctest::Approx(0.04));
  CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5, 1.0}), Error);
}

TEST_CASE("benchmark bar") {
  const Run r = benchmark();
  const EvolutionResult res = r.go();
  const auto tc = first_crack_time(res.ledger);
  REQUIRE(tc.has_value());
  CHECK(*tc >= 1.0);
  CHECK(*tc <= 1.01 + 1e-12);
  for (const LedgerRow& row : res.ledger.rows) {
    if (row.t < *tc) {
      CHECK(row.total == doctest::Approx(row.t * row.t).epsilon(1e-10));
      CHECK(row.theta == doctest::Approx(2.0 * row.t).epsilon(1e-9));
    } else {
      CHECK(row.total == 1.0);
      CHECK(std::abs(row.theta) <= 1e-12);
    }
  }
  const InequalityReport ir = check_energy_inequality(res.ledger, 1e-8);
  CHECK(ir.passed);
  CHECK(ir.max_residual <= 1e-8);
  // Pre-crack: left-endpoint work t^2 - t*Delta against total t^2.
  CHECK(energy_balance_residual(res.ledger, 0.99) <= 0.03);
  CHECK(res.trajectory.knots.size() == 201);
  for (std::size_t k = 1; k < res.trajectory.knots.size(); ++k) {
    const auto& a = res.trajectory.knots[k - 1].broken;
    const auto& b = res.trajectory.knots[k].broken;
    CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST_CASE("work density of a stretched bar") {
  const double L = 2.0, s = 0.7;
  const Mesh m = test::unit_bar(21, L);
  const auto d = EnergyDensity::quadratic();
  const LoadProgram load = test::bar_ramp(L, Schedule::ramp(1.0, 1.0), 1.0);
  const auto g = load.boundary_values(m, s);
  const auto mult = sharp_multipliers(m, {});
  const ElasticSolution u = solve_elastic({&m, &d, 1, mult, g, std::nullopt}, ElasticOptions{});
  const double theta = work_increment(m, d, u.values, 1, mult, g, load.lift_rate(m, s), load.time_derivative(m, s));
  CHECK(theta == doctest::Approx(2.0 * s / L).epsilon(1e-10));
  const auto zero_rate = std::vector<double>(g.size(), 0.0);
  const auto zero_lift = std::vector<double>(u.values.size(), 0.0);
  CHECK(work_increment(m, d, u.values, 1, mult, g, zero_lift, zero_rate) == 0.0);
}

TEST_CASE("zero load") {
  const Run r(test::unit_bar(21), LoadProgram(AffineField::zero(1), AffineField::zero(1), Schedule::ramp(1.0, 1.0), 1.0),
              TimeGrid::uniform(1.0, 10), 22);
  const EvolutionResult res = r.go();
  for (const LedgerRow& row : res.ledger.rows) {
    CHECK(row.total == 0.0);
    CHECK(row.work_cum == 0.0);
    CHECK(row.theta == 0.0);
  }
  for (const Knot& k : res.trajectory.knots) CHECK(k.broken.empty());
  CHECK(check_energy_inequality(res.ledger, 0.0).max_residual == 0.0);
  CHECK(energy_balance_residual(res.ledger) == 0.0);
}

TEST_CASE("pre-broken bar carries no stress") {
  const Run r(Mesh::bar(1.0, 21, 1.0, BoundarySpec{{Side::Left, Side::Right}}, 0.52),
              test::bar_ramp(1.0, Schedule::ramp(3.0, 1.0), 1.0), TimeGrid::uniform(1.0, 10), 22);
  const EvolutionResult res = r.go();
  for (const LedgerRow& row : res.ledger.rows) {
    CHECK(row.bulk <= 1e-20);
    CHECK(row.surface_c == 1.0);
    CHECK(std::abs(row.theta) <= 1e-12);
  }
}

TEST_CASE("hold after the crack") {
  const Run r(test::unit_bar(11), test::bar_ramp(1.0, Schedule({{0.0, 0.0}, {1.5, 1.5}, {3.0, 1.5}}), 3.0),
              TimeGrid::uniform(3.0, 30), 12);
  const EvolutionResult res = r.go();
  const auto tc = first_crack_time(res.ledger);
  REQUIRE(tc);
  CHECK(*tc == doctest::Approx(1.1));
  // After the crack nothing changes: the residual is fixed by the jump knot.
  CHECK(energy_balance_residual(res.ledger) == doctest::Approx(energy_balance_residual(res.ledger, 1.2)));
}

TEST_CASE("inflated surface energy violates the inequality") {
  const Run r = benchmark(50);
  EvolutionResult res = r.go();
  CHECK(check_energy_inequality(res.ledger, 1e-8).passed);
  res.ledger.rows[30].surface_c += 0.5;
  res.ledger.rows[30].total += 0.5;
  const InequalityReport ir = check_energy_inequality(res.ledger, 1e-8);
  CHECK_FALSE(ir.passed);
  CHECK(ir.worst_row == 30);
}

TEST_CASE("stop and resume reproduces the uninterrupted run") {
  Run r = benchmark(100);
  const EvolutionResult full = r.go();
  r.opts.stop_index = 37;
  const EvolutionResult head = r.go();
  CHECK(head.last.index == 37);
  r.opts.stop_index = -1;
  const EvolutionResult tail = r.go(&head.last);
  REQUIRE(tail.ledger.rows.size() == full.ledger.rows.size());
  for (std::size_t k = 0; k < full.ledger.rows.size(); ++k) {
    CHECK(tail.ledger.rows[k].total == full.ledger.rows[k].total);
    CHECK(tail.ledger.rows[k].work_cum == full.ledger.rows[k].work_cum);
  }
  CHECK(tail.last.gamma == full.last.gamma);
  CHECK(tail.last.state.values == full.last.state.values);
}

TEST_CASE("runs are deterministic") {
  const Run r = benchmark(100);
  const EvolutionResult a = r.go(), b = r.go();
  REQUIRE(a.ledger.rows.size() == b.ledger.rows.size());
  for (std::size_t k = 0; k < a.ledger.rows.size(); ++k) {
    CHECK(a.ledger.rows[k].bulk == b.ledger.rows[k].bulk);
    CHECK(a.ledger.rows[k].theta == b.ledger.rows[k].theta);
    CHECK(a.trajectory.knots[k].broken == b.trajectory.knots[k].broken);
  }
}

TEST_CASE("loaded initial data is rejected") {
  const Mesh m = test::unit_bar(11);
  const LoadProgram l(AffineField{{{0.0, 0.0, 0.0}}}, AffineField{{{0.0, 5.0, 0.0}}}, Schedule::ramp(1.0, 1.0), 1.0);
  StepOptions o;
  o.budget = 12;
  CHECK_THROWS_AS(initial_configuration(m, EnergyDensity::quadratic(), l, o), Error);
}
