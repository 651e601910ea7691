#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fqs/crack_state.hpp"
#include "fqs/domain_mesh.hpp"
#include "fqs/energy_model.hpp"
#include "fqs/incremental_solver.hpp"

namespace fqs {

/// Knots 0 = t_0 < ... < t_K = T. Uniform grids place t_k = k T / K, so a
/// dyadic refinement reproduces the coarse knots bit for bit.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> knots, int level = 0);
  static TimeGrid uniform(double horizon, int steps, int level = 0);
  /// base_steps * 2^level uniform steps.
  static TimeGrid dyadic(double horizon, int base_steps, int level);

  int level() const noexcept { return level_; }
  int steps() const noexcept { return static_cast<int>(knots_.size()) - 1; }
  double horizon() const noexcept { return knots_.back(); }
  double mesh_size() const noexcept;
  const std::vector<double>& knots() const noexcept { return knots_; }
  double operator[](int k) const { return knots_.at(static_cast<std::size_t>(k)); }
  bool nested_in(const TimeGrid& finer) const;

 private:
  std::vector<double> knots_;
  int level_ = 0;
};

struct LedgerRow {
  double t = 0.0;
  double bulk = 0.0;
  double surface_c = 0.0;
  double total = 0.0;
  double theta = 0.0;
  double work_cum = 0.0;
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
};

struct Knot {
  double t = 0.0;
  std::vector<BondId> broken;  // sorted
  std::vector<double> values;  // node x component
};

struct Trajectory {
  int components = 1;
  std::vector<Knot> knots;
};

struct InitialConfiguration {
  CrackSet gamma0;
  DisplacementState u0;
  PhaseField phase0;  // altmin only
};

/// Γ₀ from the mesh and u₀ from one step solve at t = 0; throws invalid-input
/// when that solve would add cracks (the data is not in equilibrium).
InitialConfiguration initial_configuration(const Mesh& mesh, const EnergyDensity& density, const LoadProgram& load,
                                           const StepOptions& opts);

/// Complete state after knot `index`, enough to resume the run.
struct Checkpoint {
  int index = 0;
  double t = 0.0;
  CrackSet gamma;
  DisplacementState state;
  PhaseField phase;
  EnergyLedger ledger;  // rows 0..index
};

struct EvolveOptions {
  StepOptions step;
  int checkpoint_every = 1;  // knots between checkpoint callbacks (0: only before an abort)
  int stop_index = -1;       // stop after this knot (-1: run to T)
  std::function<void(const Checkpoint&)> on_checkpoint;
  std::function<void(int, const Knot&, const LedgerRow&)> on_knot;
};

struct EvolutionResult {
  Trajectory trajectory;  // knots computed by this call (knot 0 included unless resumed)
  EnergyLedger ledger;    // every row from t = 0
  Checkpoint last;
};

class StepError : public Error {
 public:
  StepError(ErrorKind kind, const std::string& what, int step, double t) : Error(kind, what), step_(step), t_(t) {}
  int step() const noexcept { return step_; }
  double time() const noexcept { return t_; }

 private:
  int step_;
  double t_;
};

EvolutionResult evolve(const Mesh& mesh, const EnergyDensity& density, const LoadProgram& load, const TimeGrid& grid,
                       const InitialConfiguration& init, const EvolveOptions& opts,
                       const Checkpoint* resume = nullptr);

/// θ = Σ_b mult_b volume_b DW(∇_b u)·∇_b ġ, ġ lifted affinely into the body.
double work_increment(const Mesh& mesh, const EnergyDensity& density, std::span<const double> values, int components,
                      std::span<const double> multiplier, std::span<const double> boundary,
                      std::span<const double> rate_lift, std::span<const double> rate_boundary);

/// Work done along the boundary path from t0 to t1 with the state frozen:
/// bulk(u + lift(g(t1)) - lift(g(t0))) - bulk(u).
double path_work(const Mesh& mesh, const EnergyDensity& density, const LoadProgram& load, const BulkModel& model,
                 std::span<const double> values, int components, double t0, double t1);

struct InequalityReport {
  double max_residual = 0.0;  // max_i total(t_i) - total(0) - work_cum(t_i)
  int worst_row = 0;
  double max_budget_excess = 0.0;  // max_i surface_c(t_i) - total(0) - work_cum(t_i)
  int budget_row = 0;
  bool passed = true;
};

InequalityReport check_energy_inequality(const EnergyLedger& ledger, double tolerance);

/// max_k |total(t_k) - total(0) - Σ_{j<k} θ(t_j)(t_{j+1} - t_j)| over rows with t <= until.
double energy_balance_residual(const EnergyLedger& ledger, std::optional<double> until = std::nullopt);

/// First knot time at which surface_c increases, if any.
std::optional<double> first_crack_time(const EnergyLedger& ledger);

}  // namespace fqs
