#include "fqs/elastic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fqs/error.hpp"
#include "fqs/kernels.hpp"

namespace fqs {

namespace {

struct Layout {
  std::vector<BondId> pinned_by;  // hard pin holding the node, or -1
  std::vector<bool> floating;
  std::vector<int> free_index;  // node -> free slot, -1 when fixed or floating
  int free_count = 0;
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[static_cast<std::size_t>(i)] != i) {
    parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    i = parent[static_cast<std::size_t>(i)];
  }
  return i;
}

Layout classify(const ElasticProblem& pr) {
  const Mesh& mesh = *pr.mesh;
  const int n = mesh.node_count();
  Layout lay;
  lay.pinned_by.assign(static_cast<std::size_t>(n), -1);
  lay.floating.assign(static_cast<std::size_t>(n), true);
  lay.free_index.assign(static_cast<std::size_t>(n), -1);

  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<bool> anchor(static_cast<std::size_t>(n), false);
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const Bond& b = mesh.bond(id);
    if (!(pr.multiplier[static_cast<std::size_t>(id)] > 0.0)) continue;
    if (b.is_ghost()) {
      anchor[static_cast<std::size_t>(b.a)] = true;
      if (b.is_pin() && !pr.pin_penalty) lay.pinned_by[static_cast<std::size_t>(b.a)] = id;
    } else {
      const int ra = find_root(parent, b.a), rb = find_root(parent, b.b);
      if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
  }
  std::vector<bool> anchored_root(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i)
    if (anchor[static_cast<std::size_t>(i)]) anchored_root[static_cast<std::size_t>(find_root(parent, i))] = true;
  for (int i = 0; i < n; ++i) {
    lay.floating[static_cast<std::size_t>(i)] = !anchored_root[static_cast<std::size_t>(find_root(parent, i))];
    if (!lay.floating[static_cast<std::size_t>(i)] && lay.pinned_by[static_cast<std::size_t>(i)] < 0)
      lay.free_index[static_cast<std::size_t>(i)] = lay.free_count++;
  }
  return lay;
}

double density_coefficient(const EnergyDensity& d) {
  return d.form() == EnergyDensity::Form::ScaledQuadratic ? d.coefficient() : 1.0;
}

// Far-end value of component c across bond `id` (ghost value for ghost bonds).
inline double far_value(const ElasticProblem& pr, const Bond& b, BondId id, std::span<const double> u, int c) {
  const int m = pr.components;
  return b.is_ghost() ? pr.ghost_values[static_cast<std::size_t>(id * m + c)]
                      : u[static_cast<std::size_t>(b.b * m + c)];
}

double bond_energy(const ElasticProblem& pr, BondId id, std::span<const double> u) {
  const Bond& b = pr.mesh->bond(id);
  const double mult = pr.multiplier[static_cast<std::size_t>(id)];
  if (!(mult > 0.0)) return 0.0;
  const int m = pr.components;
  double xi[8];
  double r2 = 0.0;
  for (int c = 0; c < m; ++c) {
    const double d = far_value(pr, b, id, u, c) - u[static_cast<std::size_t>(b.a * m + c)];
    xi[c] = d;
    r2 += d * d;
  }
  if (b.is_pin()) return pr.pin_penalty ? *pr.pin_penalty * mult * r2 : 0.0;
  const double inv_len = 1.0 / b.length;
  if (pr.density->form() == EnergyDensity::Form::Custom) {
    for (int c = 0; c < m; ++c) xi[c] *= inv_len;
    return mult * b.volume * pr.density->eval_w(std::span<const double>(xi, static_cast<std::size_t>(m)));
  }
  return mult * b.volume * pr.density->w_of_norm(std::sqrt(r2) * inv_len);
}

// Gradient with respect to the free dofs (free slot x component).
void energy_gradient(const ElasticProblem& pr, const Layout& lay, std::span<const double> u, std::vector<double>& grad) {
  const Mesh& mesh = *pr.mesh;
  const int m = pr.components;
  std::fill(grad.begin(), grad.end(), 0.0);
  double xi[8], dw[8];
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const Bond& b = mesh.bond(id);
    const double mult = pr.multiplier[static_cast<std::size_t>(id)];
    if (!(mult > 0.0)) continue;
    const int fa = lay.free_index[static_cast<std::size_t>(b.a)];
    const int fb = b.is_ghost() ? -1 : lay.free_index[static_cast<std::size_t>(b.b)];
    if (fa < 0 && fb < 0) continue;
    double r2 = 0.0;
    for (int c = 0; c < m; ++c) {
      xi[c] = far_value(pr, b, id, u, c) - u[static_cast<std::size_t>(b.a * m + c)];
      r2 += xi[c] * xi[c];
    }
    // dE/d(far) = force; dE/d(a) = -force
    if (b.is_pin()) {
      if (!pr.pin_penalty) continue;
      for (int c = 0; c < m; ++c) dw[c] = 2.0 * *pr.pin_penalty * mult * xi[c];
    } else {
      const double inv_len = 1.0 / b.length;
      for (int c = 0; c < m; ++c) xi[c] *= inv_len;
      if (pr.density->form() == EnergyDensity::Form::Custom) {
        pr.density->eval_dw(std::span<const double>(xi, static_cast<std::size_t>(m)),
                            std::span<double>(dw, static_cast<std::size_t>(m)));
      } else {
        const double s = pr.density->dw_over_r(std::sqrt(r2) * inv_len);
        for (int c = 0; c < m; ++c) dw[c] = s * xi[c];
      }
      for (int c = 0; c < m; ++c) dw[c] *= mult * b.volume * inv_len;
    }
    for (int c = 0; c < m; ++c) {
      if (fa >= 0) grad[static_cast<std::size_t>(fa * m + c)] -= dw[c];
      if (fb >= 0) grad[static_cast<std::size_t>(fb * m + c)] += dw[c];
    }
  }
}

// Newton Hessian for radial densities (p-power): block m x m per bond.
CsrMatrix radial_hessian(const ElasticProblem& pr, const Layout& lay, std::span<const double> u) {
  const Mesh& mesh = *pr.mesh;
  const int m = pr.components;
  std::vector<int> ri, ci;
  std::vector<double> vi;
  double xi[8];
  double blk[64];
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const Bond& b = mesh.bond(id);
    const double mult = pr.multiplier[static_cast<std::size_t>(id)];
    if (!(mult > 0.0)) continue;
    const int fa = lay.free_index[static_cast<std::size_t>(b.a)];
    const int fb = b.is_ghost() ? -1 : lay.free_index[static_cast<std::size_t>(b.b)];
    if (fa < 0 && fb < 0) continue;
    if (b.is_pin()) {
      if (!pr.pin_penalty) continue;
      std::fill(blk, blk + m * m, 0.0);
      for (int c = 0; c < m; ++c) blk[c * m + c] = 2.0 * *pr.pin_penalty * mult;
    } else {
      const double inv_len = 1.0 / b.length;
      double r2 = 0.0;
      for (int c = 0; c < m; ++c) {
        xi[c] = (far_value(pr, b, id, u, c) - u[static_cast<std::size_t>(b.a * m + c)]) * inv_len;
        r2 += xi[c] * xi[c];
      }
      const double r = std::max(std::sqrt(r2), 1e-8);
      const double w = mult * b.volume * inv_len * inv_len;
      const double d2 = pr.density->d2w_of_norm(r);
      const double d1 = pr.density->dw_over_r(r);
      for (int c = 0; c < m; ++c)
        for (int e = 0; e < m; ++e) {
          const double nn = xi[c] * xi[e] / (r * r);
          blk[c * m + e] = w * (d2 * nn + d1 * ((c == e ? 1.0 : 0.0) - nn));
        }
    }
    for (int c = 0; c < m; ++c)
      for (int e = 0; e < m; ++e) {
        const double v = blk[c * m + e];
        if (fa >= 0) { ri.push_back(fa * m + c); ci.push_back(fa * m + e); vi.push_back(v); }
        if (fb >= 0) { ri.push_back(fb * m + c); ci.push_back(fb * m + e); vi.push_back(v); }
        if (fa >= 0 && fb >= 0) {
          ri.push_back(fa * m + c); ci.push_back(fb * m + e); vi.push_back(-v);
          ri.push_back(fb * m + c); ci.push_back(fa * m + e); vi.push_back(-v);
        }
      }
  }
  return csr_from_triplets(lay.free_count * m, std::move(ri), std::move(ci), std::move(vi));
}

void set_fixed_values(const ElasticProblem& pr, const Layout& lay, std::vector<double>& u) {
  const int m = pr.components;
  for (int i = 0; i < pr.mesh->node_count(); ++i) {
    for (int c = 0; c < m; ++c) {
      auto& v = u[static_cast<std::size_t>(i * m + c)];
      if (lay.floating[static_cast<std::size_t>(i)]) v = 0.0;
      else if (const BondId pin = lay.pinned_by[static_cast<std::size_t>(i)]; pin >= 0)
        v = pr.ghost_values[static_cast<std::size_t>(pin * m + c)];
    }
  }
}

int solve_quadratic(const ElasticProblem& pr, const Layout& lay, const ElasticOptions& opt, std::vector<double>& u,
                    bool& converged) {
  const Mesh& mesh = *pr.mesh;
  const int m = pr.components;
  const double coef = density_coefficient(*pr.density);
  int iterations = 0;
  converged = true;
  if (lay.free_count == 0) return 0;
  // The stiffness pattern is shared by all components.
  std::vector<int> ri, ci;
  std::vector<double> vi;
  std::vector<double> rhs(static_cast<std::size_t>(lay.free_count * m), 0.0);
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const Bond& b = mesh.bond(id);
    const double mult = pr.multiplier[static_cast<std::size_t>(id)];
    if (!(mult > 0.0)) continue;
    const int fa = lay.free_index[static_cast<std::size_t>(b.a)];
    if (b.is_ghost()) {
      if (fa < 0) continue;
      double k;
      if (b.is_pin()) {
        if (!pr.pin_penalty) continue;
        k = *pr.pin_penalty * mult;
      } else {
        k = mult * b.volume * coef / (b.length * b.length);
      }
      ri.push_back(fa); ci.push_back(fa); vi.push_back(k);
      for (int c = 0; c < m; ++c)
        rhs[static_cast<std::size_t>(fa * m + c)] += k * pr.ghost_values[static_cast<std::size_t>(id * m + c)];
      continue;
    }
    const int fb = lay.free_index[static_cast<std::size_t>(b.b)];
    const double k = mult * b.volume * coef / (b.length * b.length);
    if (fa >= 0) { ri.push_back(fa); ci.push_back(fa); vi.push_back(k); }
    if (fb >= 0) { ri.push_back(fb); ci.push_back(fb); vi.push_back(k); }
    if (fa >= 0 && fb >= 0) {
      ri.push_back(fa); ci.push_back(fb); vi.push_back(-k);
      ri.push_back(fb); ci.push_back(fa); vi.push_back(-k);
    } else if (fa >= 0) {
      for (int c = 0; c < m; ++c) rhs[static_cast<std::size_t>(fa * m + c)] += k * u[static_cast<std::size_t>(b.b * m + c)];
    } else if (fb >= 0) {
      for (int c = 0; c < m; ++c) rhs[static_cast<std::size_t>(fb * m + c)] += k * u[static_cast<std::size_t>(b.a * m + c)];
    }
  }
  const CsrMatrix a = csr_from_triplets(lay.free_count, std::move(ri), std::move(ci), std::move(vi));
  std::vector<double> x(static_cast<std::size_t>(lay.free_count)), bc(static_cast<std::size_t>(lay.free_count));
  for (int c = 0; c < m; ++c) {
    for (int i = 0; i < mesh.node_count(); ++i) {
      const int f = lay.free_index[static_cast<std::size_t>(i)];
      if (f < 0) continue;
      x[static_cast<std::size_t>(f)] = u[static_cast<std::size_t>(i * m + c)];
      bc[static_cast<std::size_t>(f)] = rhs[static_cast<std::size_t>(f * m + c)];
    }
    const CgResult res = conjugate_gradient(a, bc, x, opt.rel_tol, std::max(opt.max_iterations, 4 * lay.free_count));
    iterations += res.iterations;
    converged = converged && res.converged;
    for (int i = 0; i < mesh.node_count(); ++i) {
      const int f = lay.free_index[static_cast<std::size_t>(i)];
      if (f >= 0) u[static_cast<std::size_t>(i * m + c)] = x[static_cast<std::size_t>(f)];
    }
  }
  return iterations;
}

double total_energy(const ElasticProblem& pr, std::span<const double> u) {
  return blocked_sum(static_cast<std::size_t>(pr.mesh->bond_count()),
                     [&](std::size_t id) { return bond_energy(pr, static_cast<BondId>(id), u); });
}

void scatter_step(const Layout& lay, int m, std::span<const double> base, std::span<const double> dir, double alpha,
                  std::vector<double>& out) {
  std::copy(base.begin(), base.end(), out.begin());
  for (std::size_t i = 0; i < lay.free_index.size(); ++i) {
    const int f = lay.free_index[i];
    if (f < 0) continue;
    for (int c = 0; c < m; ++c) out[i * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] += alpha * dir[static_cast<std::size_t>(f * m + c)];
  }
}

// Damped Newton (radial densities) or steepest descent with Barzilai-Borwein
// steps (custom densities), each with Armijo backtracking on the energy.
int solve_nonlinear(const ElasticProblem& pr, const Layout& lay, const ElasticOptions& opt, std::vector<double>& u,
                    bool& converged) {
  const int m = pr.components;
  const std::size_t nd = static_cast<std::size_t>(lay.free_count * m);
  converged = true;
  if (nd == 0) return 0;
  const bool newton = pr.density->form() != EnergyDensity::Form::Custom;
  std::vector<double> grad(nd), dir(nd), trial(u.size()), prev_grad, prev_u;
  double energy = total_energy(pr, u);
  double bb_step = 1.0;
  int it = 0;
  converged = false;
  for (; it < opt.max_iterations; ++it) {
    energy_gradient(pr, lay, u, grad);
    const double gnorm = std::sqrt(serial::dot(grad, grad));
    if (gnorm == 0.0) {
      converged = true;
      break;
    }
    if (newton) {
      const CsrMatrix hess = radial_hessian(pr, lay, u);
      std::vector<double> neg(nd);
      for (std::size_t i = 0; i < nd; ++i) neg[i] = -grad[i];
      std::fill(dir.begin(), dir.end(), 0.0);
      conjugate_gradient(hess, neg, dir, 1e-10, static_cast<int>(4 * nd + 100));
      if (!(serial::dot(dir, grad) < 0.0)) dir = neg;
    } else {
      for (std::size_t i = 0; i < nd; ++i) dir[i] = -bb_step * grad[i];
    }
    const double slope = serial::dot(dir, grad);
    double alpha = 1.0;
    double trial_energy = energy;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      scatter_step(lay, m, u, dir, alpha, trial);
      trial_energy = total_energy(pr, trial);
      if (trial_energy <= energy + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No further decrease representable in floating point.
      converged = true;
      break;
    }
    const double decrease = energy - trial_energy;
    if (!newton) {
      // BB1 step length from the accepted move
      std::vector<double> g_new(nd);
      energy_gradient(pr, lay, trial, g_new);
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < nd; ++i) {
        const double s = alpha * dir[i];
        ss += s * s;
        sy += s * (g_new[i] - grad[i]);
      }
      bb_step = sy > 0.0 ? ss / sy : 2.0 * bb_step;
    }
    u.swap(trial);
    energy = trial_energy;
    if (decrease <= opt.energy_tol * std::max(1.0, std::abs(energy))) {
      converged = true;
      ++it;
      break;
    }
  }
  return it;
}

}  // namespace

std::vector<double> sharp_multipliers(const Mesh& mesh, std::span<const BondId> broken) {
  std::vector<double> mult(static_cast<std::size_t>(mesh.bond_count()), 1.0);
  for (BondId id : broken) mult[static_cast<std::size_t>(id)] = 0.0;
  return mult;
}

double bulk_energy(const ElasticProblem& problem, std::span<const double> values) {
  return total_energy(problem, values);
}

std::vector<double> bond_densities(const ElasticProblem& problem, std::span<const double> values) {
  std::vector<double> ones(static_cast<std::size_t>(problem.mesh->bond_count()), 1.0);
  ElasticProblem unit = problem;
  unit.multiplier = ones;
  std::vector<double> out(ones.size());
  for (std::size_t id = 0; id < out.size(); ++id) out[id] = bond_energy(unit, static_cast<BondId>(id), values);
  return out;
}

double gradient_p_norm(const ElasticProblem& pr, std::span<const double> u, double p) {
  const int m = pr.components;
  double s = 0.0;
  for (BondId id = 0; id < pr.mesh->bond_count(); ++id) {
    const Bond& b = pr.mesh->bond(id);
    if (b.is_pin() || !(pr.multiplier[static_cast<std::size_t>(id)] > 0.0)) continue;
    double r2 = 0.0;
    for (int c = 0; c < m; ++c) {
      const double d = far_value(pr, b, id, u, c) - u[static_cast<std::size_t>(b.a * m + c)];
      r2 += d * d;
    }
    s += b.volume * std::pow(std::sqrt(r2) / b.length, p);
  }
  return std::pow(s, 1.0 / p);
}

ElasticSolution solve_elastic(const ElasticProblem& pr, const ElasticOptions& opt, std::span<const double> initial) {
  if (!pr.mesh || !pr.density) throw Error(ErrorKind::InvalidInput, "elastic problem without mesh or density");
  const int m = pr.components;
  if (m < 1 || m > 8) throw Error(ErrorKind::InvalidInput, "component count must be in [1, 8]");
  const Mesh& mesh = *pr.mesh;
  if (pr.multiplier.size() != static_cast<std::size_t>(mesh.bond_count()) ||
      pr.ghost_values.size() != static_cast<std::size_t>(mesh.bond_count() * m))
    throw Error(ErrorKind::InvalidInput, "elastic problem arrays do not match the mesh");

  const Layout lay = classify(pr);
  ElasticSolution sol;
  sol.values.assign(static_cast<std::size_t>(mesh.node_count() * m), 0.0);
  if (initial.size() == sol.values.size()) std::copy(initial.begin(), initial.end(), sol.values.begin());
  set_fixed_values(pr, lay, sol.values);

  bool converged = true;
  if (pr.density->is_quadratic()) {
    sol.iterations = solve_quadratic(pr, lay, opt, sol.values, converged);
  } else {
    if (initial.size() != sol.values.size() && pr.density->form() == EnergyDensity::Form::PPower) {
      // Start Newton from the quadratic solution with the same constraints.
      const EnergyDensity quad = EnergyDensity::quadratic();
      ElasticProblem qp = pr;
      qp.density = &quad;
      bool ok = true;
      solve_quadratic(qp, lay, opt, sol.values, ok);
    }
    sol.iterations = solve_nonlinear(pr, lay, opt, sol.values, converged);
  }
  if (opt.clamp && m == 1) {
    const double bound = *opt.clamp;
    for (auto& v : sol.values) v = std::clamp(v, -bound, bound);
  }
  sol.converged = converged;
  sol.floating = lay.floating;
  sol.bulk = total_energy(pr, sol.values);
  return sol;
}

}  // namespace fqs
