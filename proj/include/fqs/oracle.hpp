#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fqs/crack_state.hpp"
#include "fqs/domain_mesh.hpp"
#include "fqs/energy_model.hpp"

namespace fqs {

/// Closed-form bar under g(0) = 0, g(L) = rate * t with W = |xi|^2.
struct BarOracle {
  double L = 1.0;
  double kappa = 1.0;
  double rate = 1.0;
  double T = 1.0;

  BarOracle(double length, double toughness, double ramp_rate, double horizon);

  /// Elastic energy (rate t)^2 / L against the crack cost kappa; the tie keeps the bar intact.
  std::optional<double> crack_time() const;
  double bulk(double t, bool cracked) const;
};

std::optional<double> bar_crack_time(const BarOracle& oracle);

struct OracleStep {
  std::vector<double> values;  // node x component
  std::vector<BondId> jump;
  double bulk = 0.0;
  double new_surface = 0.0;
  double energy() const noexcept { return bulk + new_surface; }
};

inline constexpr int kBruteForceCap = 20;

/// Plain enumeration of every crack pattern of the candidate bonds, each
/// solved with a dense direct (quadratic) or Newton (p-power) solver.
/// Refuses with budget-exceeded beyond kBruteForceCap candidates.
OracleStep brute_force_step(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev,
                            std::span<const double> boundary, int components);

/// Dense elastic minimum on a fixed broken set (the oracle's inner solve).
OracleStep oracle_elastic(const Mesh& mesh, const EnergyDensity& density, std::span<const BondId> broken,
                          std::span<const double> boundary, int components);

}  // namespace fqs
