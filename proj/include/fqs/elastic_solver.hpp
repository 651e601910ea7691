#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fqs/domain_mesh.hpp"
#include "fqs/energy_model.hpp"

namespace fqs {

/// Convex elastic subproblem on a fixed crack: minimise
///   sum_b  mult_b * volume_b * W((u_b - u_a) / length_b)
/// over nodal values, ghost bonds reading their far end from `ghost_values`.
/// A bond with multiplier 0 is broken. Zero-length ghost bonds (pins) are
/// hard constraints unless `pin_penalty` is set, in which case they add
/// pin_penalty * mult * |u_a - g|^2.
struct ElasticProblem {
  const Mesh* mesh = nullptr;
  const EnergyDensity* density = nullptr;
  int components = 1;
  std::span<const double> multiplier;    // one per bond
  std::span<const double> ghost_values;  // bond x component
  std::optional<double> pin_penalty;
};

struct ElasticOptions {
  double rel_tol = 1e-10;         // linear solves (CG relative residual)
  double energy_tol = 1e-13;      // nonlinear solves: relative energy decrease per Newton step
  int max_iterations = 20000;
  std::optional<double> clamp;    // |u| <= clamp after the solve (scalar truncation)
};

struct ElasticSolution {
  std::vector<double> values;  // node x component
  double bulk = 0.0;
  int iterations = 0;
  bool converged = true;
  std::vector<bool> floating;  // per node: belongs to a component with no Dirichlet contact
};

/// Floating components (no path to boundary data) are set to zero.
ElasticSolution solve_elastic(const ElasticProblem& problem, const ElasticOptions& options,
                              std::span<const double> initial_guess = {});

double bulk_energy(const ElasticProblem& problem, std::span<const double> values);

/// Per-bond undegraded energies volume * W(grad) (pins: pin_penalty * |u - g|^2),
/// ignoring the multipliers.
std::vector<double> bond_densities(const ElasticProblem& problem, std::span<const double> values);

/// Discrete ||grad u||_p over bonds with positive multiplier (pins excluded).
double gradient_p_norm(const ElasticProblem& problem, std::span<const double> values, double p);

/// Bond multipliers for a sharp crack: 0 on broken bonds, 1 elsewhere.
std::vector<double> sharp_multipliers(const Mesh& mesh, std::span<const BondId> broken);

}  // namespace fqs
