#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fqs/config.hpp"
#include "fqs/evolution.hpp"

namespace fqs {

struct StudyLevel {
  int level = 0;
  double delta = 0.0;
  double h = 0.0;
  EnergyLedger ledger;
  std::string error;  // empty when the level ran to T
  bool ok() const noexcept { return error.empty(); }
};

struct ProbeSample {
  int level = 0;
  double delta = 0.0;
  double t = 0.0;
  double bulk = 0.0, surface_c = 0.0, total = 0.0;
  double residual = 0.0;  // energy_balance_residual up to t
};

/// Nested levels of one problem compared at common probe times. Differences
/// are Cauchy trends between consecutive levels, not a limit certificate.
struct RefinementStudy {
  std::vector<StudyLevel> levels;
  std::vector<double> probe_times;
  std::vector<ProbeSample> samples;                   // level-major
  std::vector<std::vector<double>> bulk_difference;   // [pair l, l+1][probe]
  std::vector<std::vector<double>> surface_difference;
  bool complete() const noexcept;
};

/// Right-continuous piecewise-constant interpolant: the last row with t_row <= t.
const LedgerRow& probe(const EnergyLedger& ledger, double t);

struct LevelRun {
  EnergyLedger ledger;
  double delta = 0.0;
  double h = 0.0;
};

/// Runs levels 0..n_levels-1 (in parallel) and tabulates them at
/// `probe_times` (default: the coarsest level's knots).
RefinementStudy refine_study(const std::function<LevelRun(int)>& run_level, int n_levels,
                             std::optional<std::vector<double>> probe_times = std::nullopt);
RefinementStudy refine_study(const RunConfig& base, int n_levels);

/// Evolves one level of a config to T with the exact or altmin backend.
LevelRun run_config_level(const RunConfig& config, int level);

struct BalanceRow {
  int level = 0;
  double delta = 0.0;
  double residual = 0.0;
  std::optional<double> rate;  // log2(res_l / res_{l+1}); none when undefined
  bool exact = false;          // residual identically zero
};

/// Per-level energy_balance_residual over rows with t <= until, with empirical rates.
std::vector<BalanceRow> balance_convergence(const RefinementStudy& study, std::optional<double> until = std::nullopt);

/// Latest probe time strictly before the first crack of any level (none if no level cracks).
std::optional<double> precrack_horizon(const RefinementStudy& study);

}  // namespace fqs
