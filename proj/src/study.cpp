#include "fqs/study.hpp"

#include <algorithm>
#include <cmath>

#include "fqs/error.hpp"

namespace fqs {

bool RefinementStudy::complete() const noexcept {
  return std::all_of(levels.begin(), levels.end(), [](const StudyLevel& l) { return l.ok(); });
}

const LedgerRow& probe(const EnergyLedger& ledger, double t) {
  if (ledger.rows.empty() || t < ledger.rows.front().t) throw Error(ErrorKind::OutOfRange, "probe time before the ledger");
  auto it = std::upper_bound(ledger.rows.begin(), ledger.rows.end(), t,
                             [](double x, const LedgerRow& r) { return x < r.t; });
  return *std::prev(it);
}

LevelRun run_config_level(const RunConfig& config, int level) {
  Problem pr = build_problem(config, level);
  EvolveOptions opts;
  opts.step = pr.step;
  opts.checkpoint_every = 0;
  const auto init = initial_configuration(pr.mesh, pr.density, pr.load, pr.step);
  auto res = evolve(pr.mesh, pr.density, pr.load, pr.grid, init, opts);
  return LevelRun{std::move(res.ledger), pr.grid.mesh_size(), pr.mesh.h()};
}

RefinementStudy refine_study(const std::function<LevelRun(int)>& run_level, int n_levels,
                             std::optional<std::vector<double>> probe_times) {
  if (n_levels < 2) throw Error(ErrorKind::InvalidInput, "a refinement study needs at least two levels");
  RefinementStudy st;
  st.levels.resize(static_cast<std::size_t>(n_levels));
#pragma omp parallel for schedule(dynamic, 1)
  for (int l = 0; l < n_levels; ++l) {
    StudyLevel& sl = st.levels[static_cast<std::size_t>(l)];
    sl.level = l;
    try {
      LevelRun r = run_level(l);
      sl.ledger = std::move(r.ledger);
      sl.delta = r.delta;
      sl.h = r.h;
    } catch (const std::exception& e) {
      sl.error = e.what();
    }
  }

  if (probe_times) {
    st.probe_times = std::move(*probe_times);
  } else if (st.levels.front().ok()) {
    for (const auto& r : st.levels.front().ledger.rows) st.probe_times.push_back(r.t);
  }

  for (const StudyLevel& sl : st.levels) {
    if (!sl.ok()) continue;
    for (double t : st.probe_times) {
      if (t > sl.ledger.rows.back().t) continue;
      const LedgerRow& r = probe(sl.ledger, t);
      st.samples.push_back({sl.level, sl.delta, t, r.bulk, r.surface_c, r.total, energy_balance_residual(sl.ledger, t)});
    }
  }
  for (int l = 0; l + 1 < n_levels; ++l) {
    const StudyLevel& a = st.levels[static_cast<std::size_t>(l)];
    const StudyLevel& b = st.levels[static_cast<std::size_t>(l + 1)];
    std::vector<double> db, ds;
    if (a.ok() && b.ok())
      for (double t : st.probe_times) {
        const LedgerRow& ra = probe(a.ledger, t);
        const LedgerRow& rb = probe(b.ledger, t);
        db.push_back(std::abs(ra.bulk - rb.bulk));
        ds.push_back(std::abs(ra.surface_c - rb.surface_c));
      }
    st.bulk_difference.push_back(std::move(db));
    st.surface_difference.push_back(std::move(ds));
  }
  return st;
}

RefinementStudy refine_study(const RunConfig& base, int n_levels) {
  return refine_study([&base](int level) { return run_config_level(base, level); }, n_levels);
}

std::vector<BalanceRow> balance_convergence(const RefinementStudy& study, std::optional<double> until) {
  std::vector<BalanceRow> out;
  for (const StudyLevel& sl : study.levels) {
    BalanceRow row;
    row.level = sl.level;
    row.delta = sl.delta;
    row.residual = sl.ok() ? energy_balance_residual(sl.ledger, until) : std::nan("");
    row.exact = row.residual == 0.0;
    out.push_back(row);
  }
  for (std::size_t l = 0; l + 1 < out.size(); ++l) {
    const double a = out[l].residual, b = out[l + 1].residual;
    if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b)) out[l].rate = std::log2(a / b);
  }
  return out;
}

std::optional<double> precrack_horizon(const RefinementStudy& study) {
  std::optional<double> first;
  for (const StudyLevel& sl : study.levels) {
    if (!sl.ok()) continue;
    if (auto tc = first_crack_time(sl.ledger)) first = first ? std::min(*first, *tc) : *tc;
  }
  if (!first) return std::nullopt;
  std::optional<double> best;
  for (double t : study.probe_times)
    if (t < *first) best = t;
  return best;
}

}  // namespace fqs
