#include "fqs/crack_state.hpp"

#include <algorithm>

#include "fqs/error.hpp"

namespace fqs {

CrackSet::CrackSet(const Mesh& mesh, std::vector<BondId> broken) : broken_(std::move(broken)) {
  std::sort(broken_.begin(), broken_.end());
  broken_.erase(std::unique(broken_.begin(), broken_.end()), broken_.end());
  if (!broken_.empty() && (broken_.front() < 0 || broken_.back() >= mesh.bond_count()))
    throw Error(ErrorKind::InvalidInput, "crack references an unknown bond");
}

bool CrackSet::contains(BondId id) const noexcept { return std::binary_search(broken_.begin(), broken_.end(), id); }

bool CrackSet::includes(const CrackSet& other) const noexcept {
  return std::includes(broken_.begin(), broken_.end(), other.broken_.begin(), other.broken_.end());
}

CrackSet union_with_jump(const Mesh& mesh, const CrackSet& gamma, std::span<const BondId> jump) {
  for (BondId id : jump) {
    if (id < 0 || id >= mesh.bond_count()) throw Error(ErrorKind::InvalidInput, "jump references an unknown bond");
    if (!mesh.bond(id).breakable && !gamma.contains(id))
      throw Error(ErrorKind::InvalidInput, "jump contains an unbreakable bond");
  }
  std::vector<BondId> merged = gamma.broken();
  merged.insert(merged.end(), jump.begin(), jump.end());
  return CrackSet(mesh, std::move(merged));
}

double measure(const Mesh& mesh, const CrackSet& gamma) {
  double s = 0.0;
  for (BondId id : gamma.broken()) s += mesh.bond(id).surface;
  return s;
}

double measure_c(const Mesh& mesh, std::span<const BondId> bonds) {
  double s = 0.0;
  for (BondId id : bonds)
    if (!mesh.bond(id).free_boundary) s += mesh.bond(id).surface;
  return s;
}

double measure_c(const Mesh& mesh, const CrackSet& gamma) { return measure_c(mesh, gamma.broken()); }

}  // namespace fqs
