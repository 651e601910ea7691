#include <doctest.h>

#include <cmath>

#include "fqs/error.hpp"
#include "fqs/oracle.hpp"
#include "support.hpp"

using namespace fqs;

TEST_CASE("bar crack times") {
  CHECK(bar_crack_time(BarOracle(1.0, 1.0, 1.0, 2.0)) == 1.0);
  CHECK(bar_crack_time(BarOracle(4.0, 1.0, 1.0, 3.0)) == 2.0);
  CHECK_FALSE(bar_crack_time(BarOracle(1.0, 5.0, 1.0, 2.0)).has_value());
  CHECK(bar_crack_time(BarOracle(1.0, 1.0, -2.0, 1.0)) == 0.5);
  const BarOracle b(1.0, 1.0, 1.0, 2.0);
  CHECK(b.bulk(0.5, false) == 0.25);
  CHECK(b.bulk(1.5, true) == 0.0);
}

TEST_CASE("enumeration on trivial instances") {
  const auto d = EnergyDensity::quadratic();
  const Mesh m = test::unit_bar(6);

  const OracleStep z = brute_force_step(m, d, CrackSet(m, {}), test::bar_ends(m, 0.0), 1);
  CHECK(z.jump.empty());
  CHECK(z.energy() == 0.0);
  for (double v : z.values) CHECK(v == 0.0);

  // Notch-line square with the whole line already cut: nothing left to enumerate.
  const Mesh sq = Mesh::rect(1.0, 1.0, 0.5, 1.0, {}, NotchSpec{0.0, 0.5, 1.0, 0.5}, BreakableSet::NotchLine);
  const LoadProgram load(AffineField{{{0.0, 0.0, 1.0}}}, AffineField::zero(1), Schedule::ramp(1.0, 1.0), 1.0);
  const auto g = load.boundary_values(sq, 1.0);
  const OracleStep e = brute_force_step(sq, d, CrackSet::initial(sq), g, 1);
  const OracleStep plain = oracle_elastic(sq, d, sq.initial_crack(), g, 1);
  CHECK(e.jump.empty());
  CHECK(e.bulk == plain.bulk);

  CHECK_THROWS_AS(brute_force_step(test::unit_bar(30), d, CrackSet(test::unit_bar(30), {}), test::bar_ends(test::unit_bar(30), 1.0), 1),
                  Error);
}
