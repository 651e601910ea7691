#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fqs/crack_state.hpp"
#include "fqs/domain_mesh.hpp"
#include "fqs/energy_model.hpp"
#include "fqs/error.hpp"

namespace fqs {

enum class Backend { Exact, AltMin };

struct StepOptions {
  Backend backend = Backend::Exact;
  double tolerance = 1e-10;        // altmin: energy decrease per sweep; exact: unused
  double linear_tolerance = 1e-10; // CG relative residual of the inner elastic solves
  int max_iterations = 2000;       // altmin sweeps per start
  int budget = 20;                 // exact: max number of candidate bonds
  std::optional<double> truncation_bound;
  double at_epsilon = 0.0;         // 0: 4h
  double at_eta = 0.0;             // 0: 1e-6 * at_epsilon
  double threshold = 0.1;          // phase value at or below which a bond counts as broken
  int seed_stride = 2;             // altmin: nucleation seed every k-th candidate bond

  double epsilon_for(const Mesh& mesh) const { return at_epsilon > 0.0 ? at_epsilon : 4.0 * mesh.h(); }
  double eta_for(const Mesh& mesh) const { return at_eta > 0.0 ? at_eta : 1e-6 * epsilon_for(mesh); }
};

struct DisplacementState {
  int components = 1;
  std::vector<double> values;   // node x component
  std::vector<BondId> jump;     // bonds broken by this solve (sorted)
  double bulk = 0.0;
  double new_surface = 0.0;     // exact: H_c measure of the jump; altmin: surrogate increase

  double energy() const noexcept { return bulk + new_surface; }
};

/// Shared tie rule: strictly lower energy wins; within `tol` the smaller new
/// crack measure wins; then the lexicographically smaller sorted bond list.
bool preferred(double e1, double m1, std::span<const BondId> s1, double e2, double m2, std::span<const BondId> s2,
               double tol);
/// Energy tolerance within which two exact candidates count as tied.
double tie_tolerance(double energy) noexcept;

/// Global minimiser of bulk + H_c(new crack) over every crack pattern of the
/// candidate bonds (breakable, not yet broken), by depth-first branch and
/// bound. Refuses with budget-exceeded when there are more than opts.budget
/// candidates.
DisplacementState solve_step_exact(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev,
                                   std::span<const double> boundary, int components, const StepOptions& opts);

/// Phase field over the mesh nodes plus pad chains outside every Dirichlet
/// ghost bond, so cracks along the constrained boundary cost the same as
/// interior ones.
struct PhaseField {
  std::vector<double> v;
};

PhaseField fresh_phase_field(const Mesh& mesh, const StepOptions& opts);

struct AltMinResult {
  DisplacementState state;
  PhaseField phase;
  int sweeps = 0;
};

class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, DisplacementState last, double residual)
      : Error(ErrorKind::Nonconvergence, what), last_(std::move(last)), residual_(residual) {}
  const DisplacementState& last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return residual_; }

 private:
  DisplacementState last_;
  double residual_;
};

/// Alternating minimisation of the AT1 regularisation with irreversibility
/// v <= history, restarted from seeded nucleation sites; the best start under
/// the tie rule is returned.
AltMinResult solve_step_altmin(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev,
                               const PhaseField& history, std::span<const double> boundary, int components,
                               const StepOptions& opts);

/// Bond multipliers and pin treatment of the bulk term for a given crack model.
struct BulkModel {
  std::vector<double> multiplier;
  std::optional<double> pin_penalty;
};

/// Degraded bulk model of the phase-field backend at phase `phase`.
BulkModel altmin_bulk_model(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma,
                            const PhaseField& phase, const StepOptions& opts);

/// Surface energy of the phase-field surrogate.
double phase_surface_energy(const Mesh& mesh, const PhaseField& phase, const StepOptions& opts);

/// Discrete cost of one fully developed crack per unit facet before
/// normalisation (depends only on at_epsilon / h).
double phase_crack_cost(double epsilon_over_h);

/// Energy of `state` minus the minimum over fields whose new crack is measured
/// relative to gamma_prev ∪ state.jump. Zero for a minimiser of its own jump set.
double verify_own_jump_minimality(const Mesh& mesh, const EnergyDensity& density, const DisplacementState& state,
                                  const CrackSet& gamma_prev, std::span<const double> boundary, const StepOptions& opts);

/// Bonds that are candidates for a new crack.
std::vector<BondId> candidate_bonds(const Mesh& mesh, const CrackSet& gamma_prev);

}  // namespace fqs
