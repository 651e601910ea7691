#include <doctest.h>

#include "fqs/crack_state.hpp"
#include "fqs/error.hpp"
#include "support.hpp"

using namespace fqs;

TEST_CASE("union with a jump") {
  const Mesh m = test::unit_bar(6);
  const CrackSet empty(m, {});
  const std::vector<BondId> j{3};
  const CrackSet one = union_with_jump(m, empty, j);
  CHECK(one.broken() == std::vector<BondId>{3});
  CHECK(one.includes(empty));
  CHECK(union_with_jump(m, one, j) == one);
  CHECK(measure_c(m, union_with_jump(m, one, j)) == measure_c(m, one));

  const std::vector<BondId> bad{99};
  CHECK_THROWS_AS(union_with_jump(m, one, bad), Error);
  CHECK_THROWS_AS(CrackSet(m, {-1}), Error);
}

TEST_CASE("sets are sorted and duplicate-free") {
  const Mesh m = test::unit_bar(6);
  const CrackSet c(m, {4, 1, 4, 2});
  CHECK(c.broken() == std::vector<BondId>{1, 2, 4});
  CHECK(c.contains(2));
  CHECK_FALSE(c.contains(3));
}

TEST_CASE("tip growth adds one facet") {
  const double h = 0.25;
  const Mesh m = Mesh::rect(1.0, 1.0, h, 1.0, {}, NotchSpec{0.0, 0.5, 0.25, 0.5});
  const CrackSet g0 = CrackSet::initial(m);
  BondId tip = -1;
  for (BondId id : m.breakable_bonds()) {
    const auto mid = m.bond_midpoint(id);
    if (!m.bond(id).is_ghost() && std::abs(mid[1] - 0.5) < 1e-12 && std::abs(mid[0] - 0.375) < 1e-12) tip = id;
  }
  REQUIRE(tip >= 0);
  const std::vector<BondId> j{tip};
  const CrackSet g1 = union_with_jump(m, g0, j);
  CHECK(measure(m, g1) - measure(m, g0) == doctest::Approx(h * m.kappa()).epsilon(1e-14));
}

TEST_CASE("measures") {
  const Mesh m = Mesh::rect(1.0, 1.0, 0.5, 1.0, BoundarySpec{{Side::Bottom, Side::Top}});
  CHECK(measure(m, CrackSet(m, {})) == 0.0);
  CHECK(measure_c(m, CrackSet(m, {})) == 0.0);
  const BondId freeb = m.initial_crack()[0];
  const CrackSet f(m, {freeb});
  CHECK(measure(m, f) == m.bond(freeb).surface);
  CHECK(measure_c(m, f) == 0.0);

  const Mesh bar = test::unit_bar(2);
  const CrackSet all(bar, {0, 1, 2});
  CHECK(measure(bar, all) == 3.0);
  CHECK(measure_c(bar, all) == 3.0);
}
