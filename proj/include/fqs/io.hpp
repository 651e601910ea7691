#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fqs/evolution.hpp"
#include "fqs/incremental_solver.hpp"

namespace fqs {

/// Text formats. Every file starts with "<magic> <version>"; a different
/// version is rejected with a version error. Doubles use shortest round-trip
/// decimals, so reading back is exact.
inline constexpr int kFormatVersion = 1;

inline constexpr const char* kLedgerHeader = "t,bulk,surface_c,total,theta,work_cum";

std::string ledger_csv_row(const LedgerRow& row);
void write_ledger(const std::filesystem::path& path, const EnergyLedger& ledger);
EnergyLedger read_ledger(const std::filesystem::path& path);
EnergyLedger parse_ledger(std::istream& in);

/// Trajectory files are written incrementally: header, then one record per knot.
void write_trajectory_header(std::ostream& out, int components, int nodes);
void write_knot(std::ostream& out, int index, const Knot& knot);
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj, int nodes);
Trajectory read_trajectory(const std::filesystem::path& path);
Trajectory parse_trajectory(std::istream& in);

void write_snapshot(const std::filesystem::path& path, const DisplacementState& state);
DisplacementState read_snapshot(const std::filesystem::path& path);

/// Atomic: written to a temporary file next to `path`, then renamed.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::filesystem::path& path, const Mesh& mesh);

/// Legacy VTK ASCII structured grid with the nodal values and a per-node count of broken bonds.
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const Knot& knot, int components);

/// Exclusive lock on an output directory for the lifetime of the object.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path file_;
};

}  // namespace fqs
