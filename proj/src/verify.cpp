#include "fqs/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fqs/crack_state.hpp"
#include "fqs/elastic_solver.hpp"
#include "fqs/error.hpp"
#include "fqs/oracle.hpp"
#include "fqs/text_format.hpp"

namespace fqs {

bool VerifyReport::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* VerifyReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

VerifyReport verify_trajectory(const Trajectory& traj, const EnergyLedger& ledger, const RunConfig& config, int level) {
  const Problem pr = build_problem(config, level);
  const Mesh& mesh = pr.mesh;
  const bool exact = pr.step.backend == Backend::Exact;
  const int m = pr.load.components();
  VerifyReport rep;

  {
    CheckResult c{"shape", true, ""};
    std::ostringstream why;
    if (traj.components != m) why << "trajectory has " << traj.components << " components, config " << m << "; ";
    if (traj.knots.size() != ledger.rows.size())
      why << traj.knots.size() << " knots vs " << ledger.rows.size() << " ledger rows; ";
    for (std::size_t k = 0; k < std::min(traj.knots.size(), ledger.rows.size()); ++k)
      if (traj.knots[k].t != ledger.rows[k].t) {
        why << "knot " << k << " time " << format_double(traj.knots[k].t) << " differs from ledger; ";
        break;
      }
    for (std::size_t k = 0; k < traj.knots.size(); ++k) {
      if (k >= static_cast<std::size_t>(pr.grid.steps()) + 1 || traj.knots[k].t != pr.grid[static_cast<int>(k)]) {
        why << "knot " << k << " is not on the configured time grid; ";
        break;
      }
      if (traj.knots[k].values.size() != static_cast<std::size_t>(mesh.node_count() * m)) {
        why << "knot " << k << " has the wrong number of values; ";
        break;
      }
      if (!traj.knots[k].broken.empty() && traj.knots[k].broken.back() >= mesh.bond_count()) {
        why << "knot " << k << " names a bond outside the mesh; ";
        break;
      }
    }
    if (traj.knots.empty()) why << "empty trajectory; ";
    c.detail = why.str();
    c.passed = c.detail.empty();
    rep.checks.push_back(c);
    if (!c.passed) return rep;  // later checks index knots and rows in lockstep
  }

  {
    CheckResult c{"irreversibility", true, ""};
    const CrackSet g0 = CrackSet::initial(mesh);
    if (!std::includes(traj.knots[0].broken.begin(), traj.knots[0].broken.end(), g0.broken().begin(), g0.broken().end())) {
      c.passed = false;
      c.detail = "knot 0 does not contain the initial crack";
    }
    for (std::size_t k = 1; k < traj.knots.size() && c.passed; ++k) {
      const auto& a = traj.knots[k - 1].broken;
      const auto& b = traj.knots[k].broken;
      if (!std::includes(b.begin(), b.end(), a.begin(), a.end())) {
        c.passed = false;
        c.detail = "knot " + std::to_string(k) + " drops a bond broken at knot " + std::to_string(k - 1);
      }
    }
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"ledger-arithmetic", true, ""};
    std::ostringstream why;
    for (std::size_t k = 0; k < ledger.rows.size(); ++k) {
      const LedgerRow& r = ledger.rows[k];
      if (!close(r.total, r.bulk + r.surface_c, 1e-12)) {
        why << "row " << k << ": total != bulk + surface_c; ";
        break;
      }
      const double mc = measure_c(mesh, traj.knots[k].broken);
      if (!close(r.surface_c, mc, 1e-12)) {
        why << "row " << k << ": surface_c " << format_double(r.surface_c) << " != crack measure " << format_double(mc) << "; ";
        break;
      }
      if (k > 0 && r.surface_c < ledger.rows[k - 1].surface_c) {
        why << "row " << k << ": surface_c decreases; ";
        break;
      }
    }
    if (!ledger.rows.empty() && ledger.rows[0].work_cum != 0.0) why << "work_cum does not start at 0; ";
    if (exact) {
      for (std::size_t k = 0; k < ledger.rows.size(); ++k) {
        const auto mult = sharp_multipliers(mesh, traj.knots[k].broken);
        const auto g = pr.load.boundary_values(mesh, traj.knots[k].t);
        ElasticProblem ep{&mesh, &pr.density, m, mult, g, std::nullopt};
        const double bulk = bulk_energy(ep, traj.knots[k].values);
        if (!close(bulk, ledger.rows[k].bulk, 1e-9)) {
          why << "row " << k << ": bulk " << format_double(ledger.rows[k].bulk) << " but the stored field gives "
              << format_double(bulk) << "; ";
          break;
        }
      }
    }
    c.detail = why.str();
    c.passed = c.detail.empty();
    rep.checks.push_back(c);
  }

  {
    const double tol = exact ? 1e-8 : std::max(1e-6, 100.0 * pr.step.tolerance);
    const InequalityReport ir = check_energy_inequality(ledger, tol);
    CheckResult c{"energy-inequality", ir.passed, ""};
    std::ostringstream why;
    why << "max residual " << format_double(ir.max_residual) << " at row " << ir.worst_row << ", surface budget excess "
        << format_double(ir.max_budget_excess) << " at row " << ir.budget_row << " (tolerance " << format_double(tol) << ")";
    c.detail = why.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"boundary-data", true, ""};
    const double tol = exact ? 0.0 : 1e-3;
    for (std::size_t k = 0; k < traj.knots.size() && c.passed; ++k) {
      const auto g = pr.load.boundary_values(mesh, traj.knots[k].t);
      const auto& broken = traj.knots[k].broken;
      for (BondId id = 0; id < mesh.bond_count() && c.passed; ++id) {
        const Bond& b = mesh.bond(id);
        if (!b.is_pin() || std::binary_search(broken.begin(), broken.end(), id)) continue;
        for (int comp = 0; comp < m; ++comp) {
          const double u = traj.knots[k].values[static_cast<std::size_t>(b.a * m + comp)];
          const double gv = g[static_cast<std::size_t>(id * m + comp)];
          if (std::abs(u - gv) > tol * std::max(1.0, std::abs(gv))) {
            c.passed = false;
            c.detail = "knot " + std::to_string(k) + ": node " + std::to_string(b.a) + " holds " + format_double(u) +
                       " instead of the boundary value " + format_double(gv);
            break;
          }
        }
      }
    }
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"global-minimality", true, ""};
    const bool shipped = pr.density.form() != EnergyDensity::Form::Custom;
    int checked = 0, skipped = 0;
    std::vector<std::string> failures(traj.knots.size());
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : checked, skipped)
    for (std::size_t k = 1; k < traj.knots.size(); ++k) {
      try {
        const CrackSet prev(mesh, traj.knots[k - 1].broken);
        if (!shipped || static_cast<int>(candidate_bonds(mesh, prev).size()) > kBruteForceCap) {
          ++skipped;
          continue;
        }
        const auto g = pr.load.boundary_values(mesh, traj.knots[k].t);
        const OracleStep o = brute_force_step(mesh, pr.density, prev, g, m);
        std::vector<BondId> jump;
        std::set_difference(traj.knots[k].broken.begin(), traj.knots[k].broken.end(), prev.broken().begin(),
                            prev.broken().end(), std::back_inserter(jump));
        const double own = ledger.rows[k].bulk + measure_c(mesh, jump);
        const double tol = 1e-9 * std::max(1.0, std::abs(o.energy()));
        std::ostringstream why;
        if (exact) {
          if (std::abs(own - o.energy()) > tol || jump != o.jump)
            why << "knot " << k << ": energy " << format_double(own) << " with " << jump.size()
                << " new bonds, enumeration gives " << format_double(o.energy()) << " with " << o.jump.size();
        } else if (own < o.energy() - tol) {
          why << "knot " << k << ": energy " << format_double(own) << " below the enumerated minimum "
              << format_double(o.energy());
        }
        failures[k] = why.str();
        ++checked;
      } catch (const std::exception& e) {
        failures[k] = "knot " + std::to_string(k) + ": " + e.what();
      }
    }
    for (const auto& f : failures)
      if (!f.empty()) {
        c.passed = false;
        c.detail = f;
        break;
      }
    if (c.passed)
      c.detail = std::to_string(checked) + " knots enumerated, " + std::to_string(skipped) + " beyond the cap of " +
                 std::to_string(kBruteForceCap) + " candidates";
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace fqs
