#include "fqs/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

#include "fqs/error.hpp"

namespace fqs {

BarOracle::BarOracle(double length, double toughness, double ramp_rate, double horizon)
    : L(length), kappa(toughness), rate(ramp_rate), T(horizon) {
  if (!(L > 0.0) || !(kappa > 0.0)) throw Error(ErrorKind::InvalidInput, "bar oracle needs L > 0 and kappa > 0");
  if (!(T >= 0.0)) throw Error(ErrorKind::InvalidInput, "bar oracle needs T >= 0");
}

std::optional<double> BarOracle::crack_time() const {
  if (rate == 0.0) return std::nullopt;
  const double tc = std::sqrt(kappa * L) / std::abs(rate);
  if (tc > T) return std::nullopt;
  return tc;
}

double BarOracle::bulk(double t, bool cracked) const {
  if (cracked) return 0.0;
  const double g = rate * t;
  return g * g / L;
}

std::optional<double> bar_crack_time(const BarOracle& oracle) { return oracle.crack_time(); }

namespace {

class DenseSolver {
 public:
  DenseSolver(const Mesh& mesh, const EnergyDensity& density, std::span<const double> boundary, int m)
      : mesh_(mesh), density_(density), g_(boundary), m_(m) {
    if (density.form() == EnergyDensity::Form::Custom)
      throw Error(ErrorKind::InvalidInput, "the enumeration oracle needs a shipped density form");
  }

  OracleStep solve(const std::vector<char>& broken) const {
    const int n = mesh_.node_count();
    std::vector<int> pin(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    std::vector<char> reached(static_cast<std::size_t>(n), 0);
    std::deque<int> queue;
    for (BondId id = 0; id < mesh_.bond_count(); ++id) {
      if (broken[static_cast<std::size_t>(id)]) continue;
      const Bond& b = mesh_.bond(id);
      if (b.is_ghost()) {
        if (b.is_pin()) pin[static_cast<std::size_t>(b.a)] = id;
        if (!reached[static_cast<std::size_t>(b.a)]) {
          reached[static_cast<std::size_t>(b.a)] = 1;
          queue.push_back(b.a);
        }
      } else {
        adj[static_cast<std::size_t>(b.a)].push_back(b.b);
        adj[static_cast<std::size_t>(b.b)].push_back(b.a);
      }
    }
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      for (int j : adj[static_cast<std::size_t>(i)])
        if (!reached[static_cast<std::size_t>(j)]) {
          reached[static_cast<std::size_t>(j)] = 1;
          queue.push_back(j);
        }
    }
    std::vector<int> slot(static_cast<std::size_t>(n), -1);
    int dofs = 0;
    for (int i = 0; i < n; ++i)
      if (reached[static_cast<std::size_t>(i)] && pin[static_cast<std::size_t>(i)] < 0) slot[static_cast<std::size_t>(i)] = dofs++;

    OracleStep out;
    out.values.assign(static_cast<std::size_t>(n * m_), 0.0);
    for (int i = 0; i < n; ++i)
      if (pin[static_cast<std::size_t>(i)] >= 0)
        for (int c = 0; c < m_; ++c)
          out.values[static_cast<std::size_t>(i * m_ + c)] = g_[static_cast<std::size_t>(pin[static_cast<std::size_t>(i)] * m_ + c)];

    Eigen::VectorXd x = Eigen::VectorXd::Zero(dofs * m_);
    if (dofs > 0) {
      x = quadratic_minimiser(broken, slot, out.values, dofs);
      if (!density_.is_quadratic()) x = newton(broken, slot, out.values, dofs, x);
    }
    scatter(slot, x, out.values);
    out.bulk = energy(broken, out.values);
    return out;
  }

 private:
  double coef() const { return density_.form() == EnergyDensity::Form::ScaledQuadratic ? density_.coefficient() : 1.0; }

  double far(const Bond& b, BondId id, const std::vector<double>& u, int c) const {
    return b.is_ghost() ? g_[static_cast<std::size_t>(id * m_ + c)] : u[static_cast<std::size_t>(b.b * m_ + c)];
  }

  void scatter(const std::vector<int>& slot, const Eigen::VectorXd& x, std::vector<double>& u) const {
    for (std::size_t i = 0; i < slot.size(); ++i)
      if (slot[i] >= 0)
        for (int c = 0; c < m_; ++c) u[i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)] = x(slot[i] * m_ + c);
  }

  double energy(const std::vector<char>& broken, const std::vector<double>& u) const {
    double e = 0.0;
    for (BondId id = 0; id < mesh_.bond_count(); ++id) {
      const Bond& b = mesh_.bond(id);
      if (broken[static_cast<std::size_t>(id)] || b.is_pin()) continue;
      double r2 = 0.0;
      for (int c = 0; c < m_; ++c) {
        const double d = (far(b, id, u, c) - u[static_cast<std::size_t>(b.a * m_ + c)]) / b.length;
        r2 += d * d;
      }
      e += b.volume * density_.w_of_norm(std::sqrt(r2));
    }
    return e;
  }

  // Weighted graph Laplacian solve; components decouple.
  Eigen::VectorXd quadratic_minimiser(const std::vector<char>& broken, const std::vector<int>& slot,
                                      const std::vector<double>& fixed, int dofs) const {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dofs, dofs);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dofs, m_);
    for (BondId id = 0; id < mesh_.bond_count(); ++id) {
      const Bond& b = mesh_.bond(id);
      if (broken[static_cast<std::size_t>(id)] || b.is_pin()) continue;
      const double k = b.volume / (b.length * b.length);
      const int sa = slot[static_cast<std::size_t>(b.a)];
      const int sb = b.is_ghost() ? -1 : slot[static_cast<std::size_t>(b.b)];
      if (sa >= 0) K(sa, sa) += k;
      if (sb >= 0) K(sb, sb) += k;
      if (sa >= 0 && sb >= 0) {
        K(sa, sb) -= k;
        K(sb, sa) -= k;
      }
      for (int c = 0; c < m_; ++c) {
        if (sa >= 0 && sb < 0) {
          const double other = b.is_ghost() ? g_[static_cast<std::size_t>(id * m_ + c)]
                                            : fixed[static_cast<std::size_t>(b.b * m_ + c)];
          rhs(sa, c) += k * other;
        }
        if (sb >= 0 && sa < 0) rhs(sb, c) += k * fixed[static_cast<std::size_t>(b.a * m_ + c)];
      }
    }
    const Eigen::MatrixXd sol = K.ldlt().solve(rhs);
    Eigen::VectorXd x(dofs * m_);
    for (int i = 0; i < dofs; ++i)
      for (int c = 0; c < m_; ++c) x(i * m_ + c) = sol(i, c);
    return x;
  }

  Eigen::VectorXd newton(const std::vector<char>& broken, const std::vector<int>& slot, const std::vector<double>& fixed,
                         int dofs, Eigen::VectorXd x) const {
    const int nd = dofs * m_;
    std::vector<double> u = fixed;
    auto energy_at = [&](const Eigen::VectorXd& y) {
      scatter(slot, y, u);
      return energy(broken, u);
    };
    double e = energy_at(x);
    for (int it = 0; it < 200; ++it) {
      scatter(slot, x, u);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(nd);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nd, nd);
      for (BondId id = 0; id < mesh_.bond_count(); ++id) {
        const Bond& b = mesh_.bond(id);
        if (broken[static_cast<std::size_t>(id)] || b.is_pin()) continue;
        const int sa = slot[static_cast<std::size_t>(b.a)];
        const int sb = b.is_ghost() ? -1 : slot[static_cast<std::size_t>(b.b)];
        if (sa < 0 && sb < 0) continue;
        Eigen::VectorXd xi(m_);
        for (int c = 0; c < m_; ++c) xi(c) = (far(b, id, u, c) - u[static_cast<std::size_t>(b.a * m_ + c)]) / b.length;
        const double r = std::max(xi.norm(), 1e-9);
        const double s = b.volume / b.length;
        const Eigen::VectorXd f = s * density_.dw_over_r(r) * xi;
        const Eigen::MatrixXd nn = xi * xi.transpose() / (r * r);
        const Eigen::MatrixXd blk =
            s / b.length *
            (density_.d2w_of_norm(r) * nn + density_.dw_over_r(r) * (Eigen::MatrixXd::Identity(m_, m_) - nn));
        if (sa >= 0) {
          grad.segment(sa * m_, m_) -= f;
          H.block(sa * m_, sa * m_, m_, m_) += blk;
        }
        if (sb >= 0) {
          grad.segment(sb * m_, m_) += f;
          H.block(sb * m_, sb * m_, m_, m_) += blk;
        }
        if (sa >= 0 && sb >= 0) {
          H.block(sa * m_, sb * m_, m_, m_) -= blk;
          H.block(sb * m_, sa * m_, m_, m_) -= blk;
        }
      }
      H.diagonal().array() += 1e-14 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
      const Eigen::VectorXd step = H.ldlt().solve(-grad);
      double alpha = 1.0, trial = e;
      Eigen::VectorXd y = x;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        y = x + alpha * step;
        trial = energy_at(y);
        if (trial <= e + 1e-4 * alpha * grad.dot(step)) break;
      }
      if (!(trial < e)) break;
      const double decrease = e - trial;
      x = y;
      e = trial;
      if (decrease <= 1e-15 * std::max(1.0, std::abs(e))) break;
    }
    return x;
  }

  const Mesh& mesh_;
  const EnergyDensity& density_;
  std::span<const double> g_;
  int m_;
};

struct Best {
  bool have = false;
  double energy = 0.0, measure = 0.0;
  std::vector<BondId> set;
  OracleStep step;
};

bool beats(double e, double mc, const std::vector<BondId>& set, const Best& best) {
  if (!best.have) return true;
  const double tol = 1e-11 * std::max(1.0, std::abs(best.energy));
  if (e < best.energy - tol) return true;
  if (e > best.energy + tol) return false;
  const double mtol = 1e-12 * std::max(1.0, std::max(std::abs(mc), std::abs(best.measure)));
  if (mc < best.measure - mtol) return true;
  if (mc > best.measure + mtol) return false;
  return set < best.set;
}

}  // namespace

OracleStep oracle_elastic(const Mesh& mesh, const EnergyDensity& density, std::span<const BondId> broken,
                          std::span<const double> boundary, int components) {
  std::vector<char> mask(static_cast<std::size_t>(mesh.bond_count()), 0);
  for (BondId id : broken) mask.at(static_cast<std::size_t>(id)) = 1;
  return DenseSolver(mesh, density, boundary, components).solve(mask);
}

OracleStep brute_force_step(const Mesh& mesh, const EnergyDensity& density, const CrackSet& gamma_prev,
                            std::span<const double> boundary, int components) {
  std::vector<BondId> cand;
  for (BondId id = 0; id < mesh.bond_count(); ++id)
    if (mesh.bond(id).breakable && !gamma_prev.contains(id)) cand.push_back(id);
  if (cand.size() > static_cast<std::size_t>(kBruteForceCap))
    throw Error(ErrorKind::BudgetExceeded, "enumeration oracle is capped at " + std::to_string(kBruteForceCap) +
                                               " candidate bonds, got " + std::to_string(cand.size()));
  const DenseSolver solver(mesh, density, boundary, components);
  std::vector<char> base(static_cast<std::size_t>(mesh.bond_count()), 0);
  for (BondId id : gamma_prev.broken()) base[static_cast<std::size_t>(id)] = 1;

  const long long patterns = 1LL << cand.size();
  Best global;
#pragma omp parallel
  {
    Best local;
    std::vector<char> mask;
#pragma omp for schedule(dynamic, 16) nowait
    for (long long p = 0; p < patterns; ++p) {
      mask = base;
      std::vector<BondId> set;
      double cost = 0.0;
      for (std::size_t k = 0; k < cand.size(); ++k)
        if (p >> k & 1) {
          mask[static_cast<std::size_t>(cand[k])] = 1;
          set.push_back(cand[k]);
          if (!mesh.bond(cand[k]).free_boundary) cost += mesh.bond(cand[k]).surface;
        }
      OracleStep s = solver.solve(mask);
      const double e = s.bulk + cost;
      if (beats(e, cost, set, local)) {
        local.have = true;
        local.energy = e;
        local.measure = cost;
        local.set = set;
        s.jump = std::move(set);
        s.new_surface = cost;
        local.step = std::move(s);
      }
    }
#pragma omp critical
    if (local.have && beats(local.energy, local.measure, local.set, global)) global = std::move(local);
  }
  return global.step;
}

}  // namespace fqs
