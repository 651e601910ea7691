#include <algorithm>
#include <cmath>

#include "fqs/elastic_solver.hpp"
#include "fqs/incremental_solver.hpp"

namespace fqs {

double tie_tolerance(double energy) noexcept { return 1e-11 * std::max(1.0, std::abs(energy)); }

bool preferred(double e1, double m1, std::span<const BondId> s1, double e2, double m2, std::span<const BondId> s2,
               double tol) {
  if (e1 < e2 - tol) return true;
  if (e1 > e2 + tol) return false;
  const double mtol = 1e-12 * std::max(1.0, std::max(std::abs(m1), std::abs(m2)));
  if (m1 < m2 - mtol) return true;
  if (m1 > m2 + mtol) return false;
  return std::lexicographical_compare(s1.begin(), s1.end(), s2.begin(), s2.end());
}

std::vector<BondId> candidate_bonds(const Mesh& mesh, const CrackSet& gamma_prev) {
  std::vector<BondId> out;
  for (BondId id = 0; id < mesh.bond_count(); ++id)
    if (mesh.bond(id).breakable && !gamma_prev.contains(id)) out.push_back(id);
  return out;
}

namespace {

class BranchAndBound {
 public:
  BranchAndBound(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev,
                 std::span<const double> boundary, int components, const StepOptions& opts)
      : mesh_(mesh), density_(density), boundary_(boundary), m_(components),
        candidates_(candidate_bonds(mesh, gamma_prev)) {
    base_mult_ = sharp_multipliers(mesh, gamma_prev.broken());
    elastic_.rel_tol = opts.linear_tolerance;
    elastic_.clamp = opts.truncation_bound;
    for (BondId id : candidates_) cost_.push_back(mesh.bond(id).free_boundary ? 0.0 : mesh.bond(id).surface);
  }

  std::size_t candidate_count() const noexcept { return candidates_.size(); }

  DisplacementState run() {
    mult_ = base_mult_;
    evaluate_leaf({}, 0.0);
    std::vector<BondId> chosen;
    search(0, chosen, 0.0);
    DisplacementState st;
    st.components = m_;
    st.values = std::move(best_values_);
    st.jump = best_set_;
    st.bulk = best_bulk_;
    st.new_surface = best_measure_;
    return st;
  }

 private:
  ElasticSolution solve_with(const std::vector<double>& mult) const {
    ElasticProblem pr{&mesh_, &density_, m_, mult, boundary_, std::nullopt};
    return solve_elastic(pr, elastic_);
  }

  void evaluate_leaf(const std::vector<BondId>& set, double cost) {
    ElasticSolution sol = solve_with(mult_);
    const double e = sol.bulk + cost;
    if (!have_best_ || preferred(e, cost, set, best_energy_, best_measure_, best_set_, tie_tolerance(best_energy_))) {
      have_best_ = true;
      best_energy_ = e;
      best_measure_ = cost;
      best_bulk_ = sol.bulk;
      best_set_ = set;
      best_values_ = std::move(sol.values);
    }
  }

  // True when no completion of `chosen` (decisions made for candidates [0, depth))
  // can beat the incumbent under the tie rule.
  bool cannot_win(double lower_bound, double cost, const std::vector<BondId>& chosen, std::size_t depth) const {
    const double tol = tie_tolerance(best_energy_);
    if (lower_bound > best_energy_ + tol) return true;
    if (lower_bound < best_energy_ - tol) return false;
    const double mtol = 1e-12 * std::max(1.0, std::abs(best_measure_));
    if (cost > best_measure_ + mtol) return true;
    if (cost < best_measure_ - mtol) return false;
    // Equal energy and measure at best: compare sorted lists on the decided prefix.
    const BondId limit = depth < candidates_.size() ? candidates_[depth] : mesh_.bond_count();
    std::vector<BondId> inc_prefix;
    for (BondId id : best_set_)
      if (id < limit) inc_prefix.push_back(id);
    const std::size_t n = std::min(inc_prefix.size(), chosen.size());
    for (std::size_t i = 0; i < n; ++i)
      if (inc_prefix[i] != chosen[i]) return inc_prefix[i] < chosen[i];
    return false;
  }

  void search(std::size_t depth, std::vector<BondId>& chosen, double cost) {
    if (depth == candidates_.size()) {
      if (!chosen.empty()) evaluate_leaf(chosen, cost);
      return;
    }
    if (cannot_win(cost, cost, chosen, depth)) return;
    const std::size_t remaining = candidates_.size() - depth;
    if (remaining <= kBoundSolveDepth && remaining > 1) {
      // bulk is nonincreasing in the broken set, so breaking every undecided
      // candidate bounds the bulk of all completions from below
      std::vector<double> relaxed = mult_;
      for (std::size_t k = depth; k < candidates_.size(); ++k) relaxed[static_cast<std::size_t>(candidates_[k])] = 0.0;
      const double lb = solve_with(relaxed).bulk + cost;
      if (cannot_win(lb - tie_tolerance(lb), cost, chosen, depth)) return;
    }
    const BondId id = candidates_[depth];
    mult_[static_cast<std::size_t>(id)] = 0.0;
    chosen.push_back(id);
    search(depth + 1, chosen, cost + cost_[depth]);
    chosen.pop_back();
    mult_[static_cast<std::size_t>(id)] = 1.0;
    search(depth + 1, chosen, cost);
  }

  static constexpr std::size_t kBoundSolveDepth = 24;

  const Mesh& mesh_;
  const EnergyDensity& density_;
  std::span<const double> boundary_;
  int m_;
  std::vector<BondId> candidates_;
  std::vector<double> cost_;
  std::vector<double> base_mult_, mult_;
  ElasticOptions elastic_;

  bool have_best_ = false;
  double best_energy_ = 0.0, best_measure_ = 0.0, best_bulk_ = 0.0;
  std::vector<BondId> best_set_;
  std::vector<double> best_values_;
};

}  // namespace

DisplacementState solve_step_exact(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev,
                                   std::span<const double> boundary, int components, const StepOptions& opts) {
  BranchAndBound bb(mesh, density, gamma_prev, boundary, components, opts);
  if (static_cast<int>(bb.candidate_count()) > opts.budget)
    throw Error(ErrorKind::BudgetExceeded, std::to_string(bb.candidate_count()) + " candidate bonds exceed the budget of " +
                                               std::to_string(opts.budget) + "; use the altmin backend");
  return bb.run();
}

double verify_own_jump_minimality(const Mesh& mesh, const EnergyDensity& density, const DisplacementState& state,
                                  const CrackSet& gamma_prev, std::span<const double> boundary,
                                  const StepOptions& opts) {
  const CrackSet fixed = union_with_jump(mesh, gamma_prev, state.jump);
  const int m = state.components;
  const auto mult = sharp_multipliers(mesh, fixed.broken());
  ElasticProblem pr{&mesh, &density, m, mult, boundary, std::nullopt};

  // The state as an admissible competitor: unbroken pins carry their data exactly.
  std::vector<double> values = state.values;
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const Bond& b = mesh.bond(id);
    if (b.is_pin() && mult[static_cast<std::size_t>(id)] > 0.0)
      for (int c = 0; c < m; ++c)
        values[static_cast<std::size_t>(b.a * m + c)] = boundary[static_cast<std::size_t>(id * m + c)];
  }
  const double own = bulk_energy(pr, values);

  double reference;
  if (static_cast<int>(candidate_bonds(mesh, fixed).size()) <= opts.budget) {
    StepOptions exact = opts;
    exact.backend = Backend::Exact;
    reference = solve_step_exact(mesh, density, fixed, boundary, m, exact).energy();
  } else {
    ElasticOptions eo;
    eo.rel_tol = opts.linear_tolerance;
    eo.clamp = opts.truncation_bound;
    reference = solve_elastic(pr, eo).bulk;
  }
  return own - reference;
}

}  // namespace fqs
