#include "fqs/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fqs/elastic_solver.hpp"

namespace fqs {

TimeGrid::TimeGrid(std::vector<double> knots, int level) : knots_(std::move(knots)), level_(level) {
  if (knots_.size() < 2) throw Error(ErrorKind::InvalidInput, "a time grid needs at least two knots");
  if (knots_.front() != 0.0) throw Error(ErrorKind::InvalidInput, "a time grid starts at t = 0");
  for (std::size_t k = 1; k < knots_.size(); ++k)
    if (!(knots_[k] > knots_[k - 1]) || !std::isfinite(knots_[k]))
      throw Error(ErrorKind::InvalidInput, "time grid knots must be finite and strictly increasing");
}

TimeGrid TimeGrid::uniform(double horizon, int steps, int level) {
  if (!(horizon > 0.0) || steps < 1) throw Error(ErrorKind::InvalidInput, "uniform grid needs T > 0 and steps >= 1");
  std::vector<double> k(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) k[static_cast<std::size_t>(i)] = static_cast<double>(i) * horizon / steps;
  return TimeGrid(std::move(k), level);
}

TimeGrid TimeGrid::dyadic(double horizon, int base_steps, int level) {
  if (level < 0 || level > 24) throw Error(ErrorKind::InvalidInput, "dyadic level must lie in [0, 24]");
  return uniform(horizon, base_steps << level, level);
}

double TimeGrid::mesh_size() const noexcept {
  double d = 0.0;
  for (std::size_t k = 1; k < knots_.size(); ++k) d = std::max(d, knots_[k] - knots_[k - 1]);
  return d;
}

bool TimeGrid::nested_in(const TimeGrid& finer) const {
  return std::includes(finer.knots_.begin(), finer.knots_.end(), knots_.begin(), knots_.end());
}

namespace {

struct Stepper {
  const Mesh& mesh;
  const EnergyDensity& density;
  const LoadProgram& load;
  const StepOptions& opts;

  struct Outcome {
    DisplacementState state;
    PhaseField phase;
  };

  Outcome solve(const CrackSet& gamma_prev, const PhaseField& phase, double t) const {
    const auto g = load.boundary_values(mesh, t);
    const int m = load.components();
    if (opts.backend == Backend::Exact) return {solve_step_exact(mesh, density, gamma_prev, g, m, opts), {}};
    AltMinResult r = solve_step_altmin(mesh, density, gamma_prev, phase, g, m, opts);
    return {std::move(r.state), std::move(r.phase)};
  }

  BulkModel model(const CrackSet& gamma, const PhaseField& phase) const {
    if (opts.backend == Backend::Exact) return {sharp_multipliers(mesh, gamma.broken()), std::nullopt};
    return altmin_bulk_model(mesh, density, gamma, phase, opts);
  }

  double theta(const DisplacementState& s, const BulkModel& bm, double t) const {
    const auto g = load.boundary_values(mesh, t);
    return work_increment(mesh, density, s.values, s.components, bm.multiplier, g, load.lift_rate(mesh, t),
                          load.time_derivative(mesh, t));
  }

  LedgerRow row(double t, const CrackSet& gamma, const DisplacementState& s, const PhaseField& phase,
                double work_cum) const {
    LedgerRow r;
    r.t = t;
    r.bulk = s.bulk;
    r.surface_c = measure_c(mesh, gamma);
    r.total = r.bulk + r.surface_c;
    r.theta = theta(s, model(gamma, phase), t);
    r.work_cum = work_cum;
    return r;
  }
};

}  // namespace

InitialConfiguration initial_configuration(const Mesh& mesh, const EnergyDensity& density, const LoadProgram& load,
                                           const StepOptions& opts) {
  validate_load(mesh, load);
  InitialConfiguration init;
  init.gamma0 = CrackSet::initial(mesh);
  const Stepper st{mesh, density, load, opts};
  auto out = st.solve(init.gamma0, opts.backend == Backend::AltMin ? fresh_phase_field(mesh, opts) : PhaseField{}, 0.0);
  if (!out.state.jump.empty())
    throw Error(ErrorKind::InvalidInput, "the load at t = 0 already breaks " + std::to_string(out.state.jump.size()) +
                                             " bonds; the initial crack is not in equilibrium");
  init.u0 = std::move(out.state);
  init.phase0 = std::move(out.phase);
  return init;
}

EvolutionResult evolve(const Mesh& mesh, const EnergyDensity& density, const LoadProgram& load, const TimeGrid& grid,
                       const InitialConfiguration& init, const EvolveOptions& opts, const Checkpoint* resume) {
  if (grid.horizon() > load.horizon() * (1.0 + 1e-15))
    throw Error(ErrorKind::OutOfRange, "time grid runs past the load horizon");
  const Stepper st{mesh, density, load, opts.step};
  EvolutionResult res;
  res.trajectory.components = load.components();

  Checkpoint cur;
  if (resume) {
    if (resume->index < 0 || resume->index > grid.steps() || resume->t != grid[resume->index])
      throw Error(ErrorKind::InvalidInput, "checkpoint does not lie on this time grid");
    if (resume->ledger.rows.size() != static_cast<std::size_t>(resume->index) + 1)
      throw Error(ErrorKind::InvalidInput, "checkpoint ledger does not match its knot index");
    cur = *resume;
  } else {
    cur.index = 0;
    cur.t = 0.0;
    cur.gamma = init.gamma0;
    cur.state = init.u0;
    cur.phase = init.phase0;
    const LedgerRow r0 = st.row(0.0, cur.gamma, cur.state, cur.phase, 0.0);
    cur.ledger.rows.push_back(r0);
    Knot k0{0.0, cur.gamma.broken(), cur.state.values};
    if (opts.on_knot) opts.on_knot(0, k0, r0);
    res.trajectory.knots.push_back(std::move(k0));
    if (opts.on_checkpoint && opts.checkpoint_every > 0) opts.on_checkpoint(cur);
  }

  const int last = opts.stop_index >= 0 ? std::min(opts.stop_index, grid.steps()) : grid.steps();
  for (int k = cur.index + 1; k <= last; ++k) {
    const double t = grid[k];
    Stepper::Outcome out;
    try {
      out = st.solve(cur.gamma, cur.phase, t);
    } catch (const Error& e) {
      if (opts.on_checkpoint) opts.on_checkpoint(cur);
      throw StepError(e.kind(), "step " + std::to_string(k) + " (t = " + std::to_string(t) + "): " + e.what(), k, t);
    }
    const double work = cur.ledger.rows.back().work_cum +
                        path_work(mesh, density, load, st.model(cur.gamma, cur.phase), cur.state.values,
                                  cur.state.components, cur.t, t);
    CrackSet next = union_with_jump(mesh, cur.gamma, out.state.jump);
    const LedgerRow row = st.row(t, next, out.state, out.phase, work);

    cur.index = k;
    cur.t = t;
    cur.gamma = std::move(next);
    cur.state = std::move(out.state);
    cur.phase = std::move(out.phase);
    cur.ledger.rows.push_back(row);

    Knot knot{t, cur.gamma.broken(), cur.state.values};
    if (opts.on_knot) opts.on_knot(k, knot, row);
    res.trajectory.knots.push_back(std::move(knot));
    if (opts.on_checkpoint && opts.checkpoint_every > 0 && (k % opts.checkpoint_every == 0 || k == last))
      opts.on_checkpoint(cur);
  }
  res.ledger = cur.ledger;
  res.last = std::move(cur);
  return res;
}

double work_increment(const Mesh& mesh, const EnergyDensity& density, std::span<const double> values, int m,
                      std::span<const double> multiplier, std::span<const double> boundary,
                      std::span<const double> rate_lift, std::span<const double> rate_boundary) {
  double theta = 0.0;
  std::vector<double> xi(static_cast<std::size_t>(m)), rate(static_cast<std::size_t>(m));
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const Bond& b = mesh.bond(id);
    const double mult = multiplier[static_cast<std::size_t>(id)];
    if (!(mult > 0.0) || b.is_pin()) continue;
    for (int c = 0; c < m; ++c) {
      const auto ia = static_cast<std::size_t>(b.a * m + c);
      const auto ib = static_cast<std::size_t>(b.is_ghost() ? id * m + c : b.b * m + c);
      const double far_u = b.is_ghost() ? boundary[ib] : values[ib];
      const double far_r = b.is_ghost() ? rate_boundary[ib] : rate_lift[ib];
      xi[static_cast<std::size_t>(c)] = (far_u - values[ia]) / b.length;
      rate[static_cast<std::size_t>(c)] = (far_r - rate_lift[ia]) / b.length;
    }
    std::vector<double> d = density.eval_dw(xi);
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += d[static_cast<std::size_t>(c)] * rate[static_cast<std::size_t>(c)];
    theta += mult * b.volume * s;
  }
  return theta;
}

double path_work(const Mesh& mesh, const EnergyDensity& density, const LoadProgram& load, const BulkModel& model,
                 std::span<const double> values, int m, double t0, double t1) {
  const auto g0 = load.boundary_values(mesh, t0);
  const auto g1 = load.boundary_values(mesh, t1);
  const auto l0 = load.lift(mesh, t0);
  const auto l1 = load.lift(mesh, t1);
  ElasticProblem before{&mesh, &density, m, model.multiplier, g0, model.pin_penalty};
  ElasticProblem after{&mesh, &density, m, model.multiplier, g1, model.pin_penalty};
  std::vector<double> shifted(values.begin(), values.end());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += l1[i] - l0[i];
  return bulk_energy(after, shifted) - bulk_energy(before, values);
}

InequalityReport check_energy_inequality(const EnergyLedger& ledger, double tolerance) {
  InequalityReport rep;
  if (ledger.rows.empty()) return rep;
  const double total0 = ledger.rows.front().total;
  rep.max_residual = -std::numeric_limits<double>::infinity();
  rep.max_budget_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ledger.rows.size(); ++i) {
    const LedgerRow& r = ledger.rows[i];
    const double res = r.total - total0 - r.work_cum;
    if (res > rep.max_residual) {
      rep.max_residual = res;
      rep.worst_row = static_cast<int>(i);
    }
    const double excess = r.surface_c - total0 - r.work_cum;
    if (excess > rep.max_budget_excess) {
      rep.max_budget_excess = excess;
      rep.budget_row = static_cast<int>(i);
    }
  }
  rep.passed = rep.max_residual <= tolerance && rep.max_budget_excess <= tolerance;
  return rep;
}

double energy_balance_residual(const EnergyLedger& ledger, std::optional<double> until) {
  if (ledger.rows.empty()) return 0.0;
  const double total0 = ledger.rows.front().total;
  double work = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < ledger.rows.size(); ++k) {
    if (k > 0) work += ledger.rows[k - 1].theta * (ledger.rows[k].t - ledger.rows[k - 1].t);
    if (until && ledger.rows[k].t > *until) break;
    worst = std::max(worst, std::abs(ledger.rows[k].total - total0 - work));
  }
  return worst;
}

std::optional<double> first_crack_time(const EnergyLedger& ledger) {
  for (std::size_t k = 1; k < ledger.rows.size(); ++k)
    if (ledger.rows[k].surface_c > ledger.rows[k - 1].surface_c) return ledger.rows[k].t;
  return std::nullopt;
}

}  // namespace fqs
