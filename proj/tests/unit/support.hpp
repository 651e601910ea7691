#pragma once

#include <vector>

#include "fqs/domain_mesh.hpp"
#include "fqs/evolution.hpp"

namespace fqs::test {

inline Mesh unit_bar(int nodes, double length = 1.0, double kappa = 1.0) {
  return Mesh::bar(length, nodes, kappa, BoundarySpec{{Side::Left, Side::Right}});
}

/// g = 0 at x = 0 and g = r(t) at x = L through the profile x / L.
inline LoadProgram bar_ramp(double length, Schedule schedule, double horizon) {
  return LoadProgram(AffineField{{{0.0, 1.0 / length, 0.0}}}, AffineField::zero(1), std::move(schedule), horizon);
}

/// Ghost values of the bar at end displacement s.
inline std::vector<double> bar_ends(const Mesh& mesh, double s) {
  std::vector<double> g(static_cast<std::size_t>(mesh.bond_count()), 0.0);
  for (BondId id = 0; id < mesh.bond_count(); ++id)
    if (mesh.bond(id).is_ghost()) g[static_cast<std::size_t>(id)] = mesh.bond(id).ghost_pos[0] > 0.5 * mesh.width() ? s : 0.0;
  return g;
}

}  // namespace fqs::test
