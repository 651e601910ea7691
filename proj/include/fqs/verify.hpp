#pragma once

#include <string>
#include <vector>

#include "fqs/config.hpp"
#include "fqs/evolution.hpp"

namespace fqs {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const noexcept;
  const CheckResult* find(const std::string& name) const;
};

/// Re-checks a run's output against its config: knot/row alignment,
/// irreversibility, ledger arithmetic, the discrete energy inequality,
/// boundary data on pinned nodes, and per-knot global minimality by
/// enumeration wherever the candidate count is within the enumeration cap.
VerifyReport verify_trajectory(const Trajectory& traj, const EnergyLedger& ledger, const RunConfig& config,
                               int level = 0);

}  // namespace fqs
