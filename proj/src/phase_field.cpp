#include <algorithm>
#include <cmath>
#include <limits>

#include "fqs/elastic_solver.hpp"
#include "fqs/incremental_solver.hpp"

namespace fqs {

namespace {

constexpr double kAt1 = 3.0 / 8.0;

// Phase nodes: mesh nodes first, then for every Dirichlet ghost bond a chain
// of pad nodes running away from the body.
struct PhaseLayout {
  int nodes = 0;
  std::vector<double> volume;
  struct Link {
    int i, j;
    double coef;  // volume / length^2 of the gradient quadrature
  };
  std::vector<Link> links;
  std::vector<int> pad_of_bond;  // first pad node of a Dirichlet ghost bond, else -1
};

int pad_length(double eps_over_h) { return static_cast<int>(std::ceil(2.0 * eps_over_h)) + 2; }

PhaseLayout make_layout(const Mesh& mesh, double eps) {
  PhaseLayout lay;
  const double h = mesh.h();
  const int n = mesh.node_count();
  const double facet = mesh.dimension() == 1 ? 1.0 : h;
  lay.volume.assign(static_cast<std::size_t>(n), mesh.dimension() == 1 ? h : h * h);
  lay.pad_of_bond.assign(static_cast<std::size_t>(mesh.bond_count()), -1);
  if (mesh.dimension() == 1) {
    lay.volume.front() = 0.5 * h;
    lay.volume.back() = 0.5 * h;
  }
  const int pads = pad_length(eps / h);
  int next = n;
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const Bond& b = mesh.bond(id);
    if (!b.is_ghost()) {
      lay.links.push_back({b.a, b.b, b.volume / (b.length * b.length)});
      continue;
    }
    if (b.free_boundary) continue;
    lay.pad_of_bond[static_cast<std::size_t>(id)] = next;
    if (b.is_pin()) {
      // the end node's missing half cell sits on the pad side
      lay.volume[static_cast<std::size_t>(b.a)] += 0.5 * h;
      lay.links.push_back({b.a, next, facet / h});
    } else {
      lay.links.push_back({b.a, next, facet / b.length});
    }
    for (int k = 0; k < pads; ++k) {
      lay.volume.push_back(facet * h);
      if (k > 0) lay.links.push_back({next + k - 1, next + k, facet / h});
    }
    next += pads;
  }
  lay.nodes = next;
  return lay;
}

struct Surface {
  double scale;  // kappa' * c_w
  double eps;
};

double surface_energy(const PhaseLayout& lay, const Surface& s, std::span<const double> v) {
  double bulk = 0.0, grad = 0.0;
  for (int i = 0; i < lay.nodes; ++i) bulk += lay.volume[static_cast<std::size_t>(i)] * (1.0 - v[static_cast<std::size_t>(i)]);
  for (const auto& l : lay.links) {
    const double d = v[static_cast<std::size_t>(l.i)] - v[static_cast<std::size_t>(l.j)];
    grad += l.coef * d * d;
  }
  return s.scale * (bulk / s.eps + s.eps * grad);
}

// Projected Gauss-Seidel for
//   sum_i a_i v_i^2 / 2 + scale * [sum_i vol_i (1 - v_i) / eps + eps sum_l coef_l (v_i - v_j)^2]
// over lower <= v <= upper, where a_i collects the elastic energies driving node i.
void solve_phase(const PhaseLayout& lay, const Surface& s, std::span<const double> a, std::span<const double> lower,
                 std::span<const double> upper, std::vector<double>& v) {
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(lay.nodes));
  for (const auto& l : lay.links) {
    adj[static_cast<std::size_t>(l.i)].push_back({l.j, l.coef});
    adj[static_cast<std::size_t>(l.j)].push_back({l.i, l.coef});
  }
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < lay.nodes; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      double diag = a[ui], rhs = s.scale * lay.volume[ui] / s.eps;
      for (const auto& [j, coef] : adj[ui]) {
        diag += 2.0 * s.scale * s.eps * coef;
        rhs += 2.0 * s.scale * s.eps * coef * v[static_cast<std::size_t>(j)];
      }
      const double nv = std::clamp(rhs / diag, lower[ui], upper[ui]);
      change = std::max(change, std::abs(nv - v[ui]));
      v[ui] = nv;
    }
    if (change < 1e-13) return;
  }
}

double kappa_prime(const Mesh& mesh, double eps) { return mesh.kappa() / phase_crack_cost(eps / mesh.h()); }

// Phase indices at the two ends of a bond (second is -1 for a free ghost).
std::pair<int, int> phase_ends(const Mesh& mesh, const PhaseLayout& lay, BondId id) {
  const Bond& b = mesh.bond(id);
  return {b.a, b.is_ghost() ? lay.pad_of_bond[static_cast<std::size_t>(id)] : b.b};
}

std::vector<double> phase_multipliers(const Mesh& mesh, const PhaseLayout& lay, const CrackSet& gamma,
                                      std::span<const double> v, double eta) {
  std::vector<double> mult(static_cast<std::size_t>(mesh.bond_count()), 0.0);
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    if (gamma.contains(id)) continue;
    const auto [i, j] = phase_ends(mesh, lay, id);
    if (j < 0) continue;
    const double vi = v[static_cast<std::size_t>(i)], vj = v[static_cast<std::size_t>(j)];
    mult[static_cast<std::size_t>(id)] = 0.5 * (vi * vi + vj * vj) + eta;
  }
  return mult;
}

double pin_penalty_for(const Mesh& mesh, const EnergyDensity& density) {
  double stiff = 0.0;
  for (const Bond& b : mesh.bonds())
    if (!b.is_pin()) stiff = std::max(stiff, b.volume / (b.length * b.length));
  return 1e4 * stiff * (density.form() == EnergyDensity::Form::ScaledQuadratic ? density.coefficient() : 1.0);
}

}  // namespace

double phase_crack_cost(double epsilon_over_h) {
  // 1D chain with unit spacing, two adjacent nodes held at zero.
  const int half = pad_length(epsilon_over_h) + 6;
  PhaseLayout lay;
  lay.nodes = 2 * half + 2;
  lay.volume.assign(static_cast<std::size_t>(lay.nodes), 1.0);
  for (int i = 0; i + 1 < lay.nodes; ++i) lay.links.push_back({i, i + 1, 1.0});
  const Surface s{kAt1, epsilon_over_h};
  std::vector<double> a(static_cast<std::size_t>(lay.nodes), 0.0), lo(a.size(), 0.0), hi(a.size(), 1.0),
      v(a.size(), 1.0);
  hi[static_cast<std::size_t>(half)] = hi[static_cast<std::size_t>(half + 1)] = 0.0;
  v[static_cast<std::size_t>(half)] = v[static_cast<std::size_t>(half + 1)] = 0.0;
  solve_phase(lay, s, a, lo, hi, v);
  return surface_energy(lay, s, v);
}

PhaseField fresh_phase_field(const Mesh& mesh, const StepOptions& opts) {
  return PhaseField{std::vector<double>(static_cast<std::size_t>(make_layout(mesh, opts.epsilon_for(mesh)).nodes), 1.0)};
}

double phase_surface_energy(const Mesh& mesh, const PhaseField& phase, const StepOptions& opts) {
  const double eps = opts.epsilon_for(mesh);
  const PhaseLayout lay = make_layout(mesh, eps);
  if (phase.v.size() != static_cast<std::size_t>(lay.nodes))
    throw Error(ErrorKind::InvalidInput, "phase field does not match the mesh");
  return surface_energy(lay, Surface{kappa_prime(mesh, eps) * kAt1, eps}, phase.v);
}

BulkModel altmin_bulk_model(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma,
                            const PhaseField& phase, const StepOptions& opts) {
  const PhaseLayout lay = make_layout(mesh, opts.epsilon_for(mesh));
  if (phase.v.size() != static_cast<std::size_t>(lay.nodes))
    throw Error(ErrorKind::InvalidInput, "phase field does not match the mesh");
  return BulkModel{phase_multipliers(mesh, lay, gamma, phase.v, opts.eta_for(mesh)), pin_penalty_for(mesh, density)};
}

namespace {

struct StartOutcome {
  std::vector<double> u, v, mult;
  double bulk = 0.0, surface = 0.0;
  int sweeps = 0;
};

class AltMin {
 public:
  AltMin(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev, const PhaseField& history,
         std::span<const double> boundary, int components, const StepOptions& opts)
      : mesh_(mesh), density_(density), gamma_prev_(gamma_prev), history_(history), boundary_(boundary),
        m_(components), opts_(opts) {
    const double eps = opts.epsilon_for(mesh);
    lay_ = make_layout(mesh, eps);
    if (history.v.size() != static_cast<std::size_t>(lay_.nodes))
      throw Error(ErrorKind::InvalidInput, "phase history does not match the mesh");
    surf_ = Surface{kappa_prime(mesh, eps) * kAt1, eps};
    eta_ = opts.eta_for(mesh);
    penalty_ = pin_penalty_for(mesh, density);
    // Pin penalties put ~1e4 times the bulk forces on the right-hand side, and
    // a relative residual at linear_tolerance would drown the crack-band stresses.
    elastic_.rel_tol = std::max(opts.linear_tolerance * 1e-4, 1e-15);
    elastic_.clamp = opts.truncation_bound;
    lower_.assign(static_cast<std::size_t>(lay_.nodes), 0.0);
  }

  std::pair<int, int> ends(BondId id) const { return phase_ends(mesh_, lay_, id); }

  std::vector<double> multipliers(std::span<const double> v) const {
    return phase_multipliers(mesh_, lay_, gamma_prev_, v, eta_);
  }

  ElasticSolution solve_u(const std::vector<double>& mult, std::span<const double> guess) const {
    ElasticProblem pr{&mesh_, &density_, m_, mult, boundary_, penalty_};
    return solve_elastic(pr, elastic_, guess);
  }

  StartOutcome run(std::vector<double> v) const {
    StartOutcome out;
    std::vector<double> ones(static_cast<std::size_t>(mesh_.bond_count()), 1.0);
    double previous = std::numeric_limits<double>::infinity();
    std::vector<double> u;
    for (int sweep = 1; sweep <= opts_.max_iterations; ++sweep) {
      out.mult = multipliers(v);
      ElasticSolution sol = solve_u(out.mult, u);
      u = std::move(sol.values);
      ElasticProblem pr{&mesh_, &density_, m_, ones, boundary_, penalty_};
      const std::vector<double> w = bond_densities(pr, u);
      std::vector<double> a(static_cast<std::size_t>(lay_.nodes), 0.0);
      for (BondId id = 0; id < mesh_.bond_count(); ++id) {
        if (gamma_prev_.contains(id)) continue;
        const auto [i, j] = ends(id);
        if (j < 0) continue;
        a[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(id)];
        a[static_cast<std::size_t>(j)] += w[static_cast<std::size_t>(id)];
      }
      solve_phase(lay_, surf_, a, lower_, history_.v, v);
      double bulk = 0.0;
      const auto mult = multipliers(v);
      for (std::size_t id = 0; id < w.size(); ++id) bulk += mult[id] * w[id];
      const double energy = bulk + surface_energy(lay_, surf_, v);
      const double decrease = previous - energy;
      previous = energy;
      out.sweeps = sweep;
      if (sweep > 1 && decrease < opts_.tolerance * std::max(1.0, std::abs(energy))) {
        out.mult = mult;
        ElasticSolution fin = solve_u(out.mult, u);
        out.u = std::move(fin.values);
        out.bulk = fin.bulk;
        out.v = std::move(v);
        out.surface = surface_energy(lay_, surf_, out.v);
        return out;
      }
      if (sweep == opts_.max_iterations) {
        DisplacementState last;
        last.components = m_;
        last.values = u;
        last.bulk = bulk;
        last.jump = jump_of(v);
        throw NonconvergenceError("alternating minimisation did not converge in " +
                                      std::to_string(opts_.max_iterations) + " sweeps",
                                  std::move(last), std::abs(decrease));
      }
    }
    throw NonconvergenceError("alternating minimisation needs at least one sweep", {}, 0.0);
  }

  std::vector<BondId> jump_of(std::span<const double> v) const {
    std::vector<BondId> jump;
    for (BondId id = 0; id < mesh_.bond_count(); ++id) {
      if (!mesh_.bond(id).breakable || gamma_prev_.contains(id)) continue;
      const auto [i, j] = ends(id);
      if (j < 0) continue;
      if (v[static_cast<std::size_t>(i)] <= opts_.threshold && v[static_cast<std::size_t>(j)] <= opts_.threshold)
        jump.push_back(id);
    }
    return jump;
  }

  std::vector<double> seeded(BondId id) const {
    std::vector<double> v = history_.v;
    const auto [i, j] = ends(id);
    v[static_cast<std::size_t>(i)] = 0.0;
    if (j >= 0) v[static_cast<std::size_t>(j)] = 0.0;
    return v;
  }

  double history_surface() const { return surface_energy(lay_, surf_, history_.v); }

  double cheapest_candidate() const {
    double c = std::numeric_limits<double>::infinity();
    for (BondId id : candidate_bonds(mesh_, gamma_prev_)) c = std::min(c, mesh_.bond(id).surface);
    return c;
  }

  int components() const noexcept { return m_; }

 private:
  const Mesh& mesh_;
  const EnergyDensity& density_;
  const CrackSet& gamma_prev_;
  const PhaseField& history_;
  std::span<const double> boundary_;
  int m_;
  StepOptions opts_;
  PhaseLayout lay_;
  Surface surf_{};
  double eta_ = 0.0, penalty_ = 0.0;
  ElasticOptions elastic_;
  std::vector<double> lower_;
};

}  // namespace

AltMinResult solve_step_altmin(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev,
                               const PhaseField& history, std::span<const double> boundary, int components,
                               const StepOptions& opts) {
  const AltMin solver(mesh, density, gamma_prev, history, boundary, components, opts);
  const double base_surface = solver.history_surface();

  AltMinResult best;
  bool have = false;
  double best_energy = 0.0, best_measure = 0.0;
  auto consider = [&](StartOutcome&& s) {
    DisplacementState st;
    st.components = components;
    st.values = std::move(s.u);
    st.jump = solver.jump_of(s.v);
    st.bulk = s.bulk;
    st.new_surface = s.surface - base_surface;
    const double e = st.energy();
    const double mc = measure_c(mesh, st.jump);
    const double tol = std::max(1e-6 * std::max(1.0, std::abs(e)), 10.0 * opts.tolerance);
    if (!have || preferred(e, mc, st.jump, best_energy, best_measure, best.state.jump, tol)) {
      have = true;
      best_energy = e;
      best_measure = mc;
      best.state = std::move(st);
      best.phase.v = std::move(s.v);
      best.sweeps = s.sweeps;
    }
  };

  consider(solver.run(history.v));
  // a start that nucleates a crack pays at least the cheapest bond
  if (best_energy < 0.5 * solver.cheapest_candidate()) return best;
  const auto candidates = candidate_bonds(mesh, gamma_prev);
  const int stride = std::max(1, opts.seed_stride);
  for (std::size_t k = 0; k < candidates.size(); k += static_cast<std::size_t>(stride))
    consider(solver.run(solver.seeded(candidates[k])));
  return best;
}

}  // namespace fqs
