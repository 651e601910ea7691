#pragma once

#include <span>
#include <vector>

#include "fqs/domain_mesh.hpp"

namespace fqs {

/// Irreversible crack: a sorted, duplicate-free set of broken bond ids of
/// one mesh. Value type; updates return new snapshots.
class CrackSet {
 public:
  CrackSet() = default;
  /// Throws invalid-input on ids outside the mesh.
  CrackSet(const Mesh& mesh, std::vector<BondId> broken);
  static CrackSet initial(const Mesh& mesh) { return CrackSet(mesh, mesh.initial_crack()); }

  const std::vector<BondId>& broken() const noexcept { return broken_; }
  bool contains(BondId id) const noexcept;
  bool includes(const CrackSet& other) const noexcept;
  std::size_t size() const noexcept { return broken_.size(); }

  friend bool operator==(const CrackSet&, const CrackSet&) = default;

 private:
  std::vector<BondId> broken_;
};

/// Gamma ∪ jump. Jump bonds must be breakable bonds of the mesh.
CrackSet union_with_jump(const Mesh& mesh, const CrackSet& gamma, std::span<const BondId> jump);

/// Sum of surface weights (kappa-scaled H^{N-1} surrogate).
double measure(const Mesh& mesh, const CrackSet& gamma);
/// Same, omitting bonds on the traction-free boundary.
double measure_c(const Mesh& mesh, const CrackSet& gamma);
/// measure_c of a plain bond list.
double measure_c(const Mesh& mesh, std::span<const BondId> bonds);

}  // namespace fqs
