#include "fqs/domain_mesh.hpp"

#include <algorithm>
#include <cmath>

#include "fqs/error.hpp"

namespace fqs {

namespace {

bool contains(const std::vector<Side>& sides, Side s) {
  return std::find(sides.begin(), sides.end(), s) != sides.end();
}

// Returns k if v == k*h up to roundoff, otherwise nullopt.
std::optional<int> grid_index(double v, double h) {
  const double q = v / h;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) return std::nullopt;
  return static_cast<int>(r);
}

}  // namespace

Mesh Mesh::bar(double length, int node_count, double kappa, const BoundarySpec& boundary,
               std::optional<double> notch_x) {
  if (node_count < 2) throw Error(ErrorKind::InvalidMesh, "a bar needs at least 2 nodes");
  if (!(length > 0.0) || !std::isfinite(length)) throw Error(ErrorKind::InvalidMesh, "bar length must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(ErrorKind::InvalidMesh, "toughness must be positive");
  for (Side s : boundary.dirichlet)
    if (s != Side::Left && s != Side::Right) throw Error(ErrorKind::InvalidMesh, "bar boundary sides are left/right");

  Mesh m;
  m.dim_ = 1;
  m.kappa_ = kappa;
  m.width_ = length;
  m.height_ = 0.0;
  m.nx_ = node_count;
  m.ny_ = 1;
  m.h_ = length / (node_count - 1);
  m.x_.resize(static_cast<std::size_t>(node_count));
  m.y_.assign(static_cast<std::size_t>(node_count), 0.0);
  for (int i = 0; i < node_count; ++i) m.x_[static_cast<std::size_t>(i)] = i * m.h_;
  m.x_.back() = length;

  for (int i = 0; i + 1 < node_count; ++i) {
    Bond b;
    b.a = i;
    b.b = i + 1;
    b.length = m.h_;
    b.volume = m.h_;
    b.surface = kappa;
    m.bonds_.push_back(b);
  }
  for (Side s : {Side::Left, Side::Right}) {
    Bond b;
    b.a = s == Side::Left ? 0 : node_count - 1;
    b.b = -1;
    b.length = 0.0;
    b.volume = 0.0;
    b.surface = kappa;
    b.ghost_pos = {s == Side::Left ? 0.0 : length, 0.0};
    b.side = s;
    b.free_boundary = !contains(boundary.dirichlet, s);
    m.bonds_.push_back(b);
  }

  if (notch_x) {
    const double x = *notch_x;
    const double q = x / m.h_;
    const double fl = std::floor(q);
    if (!(x > 0.0 && x < length) || std::abs(q - std::round(q)) < 1e-9)
      throw Error(ErrorKind::InvalidGeometry, "bar notch must lie strictly inside one bond");
    m.initial_crack_.push_back(static_cast<BondId>(fl));
  }
  for (BondId id = 0; id < m.bond_count(); ++id)
    if (m.bonds_[static_cast<std::size_t>(id)].free_boundary) m.initial_crack_.push_back(id);
  std::sort(m.initial_crack_.begin(), m.initial_crack_.end());
  return m;
}

Mesh Mesh::rect(double width, double height, double h, double kappa, const BoundarySpec& boundary,
                std::optional<NotchSpec> notch, BreakableSet breakable) {
  if (!(h > 0.0) || !(width > 0.0) || !(height > 0.0)) throw Error(ErrorKind::InvalidMesh, "rectangle sizes must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(ErrorKind::InvalidMesh, "toughness must be positive");
  const auto nxo = grid_index(width, h);
  const auto nyo = grid_index(height, h);
  if (!nxo || !nyo || *nxo < 1 || *nyo < 1) throw Error(ErrorKind::InvalidMesh, "h must divide width and height");

  Mesh m;
  m.dim_ = 2;
  m.h_ = h;
  m.kappa_ = kappa;
  m.width_ = width;
  m.height_ = height;
  m.nx_ = *nxo;
  m.ny_ = *nyo;
  const int nx = m.nx_, ny = m.ny_;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.x_.push_back((i + 0.5) * h);
      m.y_.push_back((j + 0.5) * h);
    }
  auto node = [nx](int i, int j) { return j * nx + i; };

  auto interior = [&](int a, int b) {
    Bond bond;
    bond.a = a;
    bond.b = b;
    bond.length = h;
    bond.volume = h * h;
    bond.surface = kappa * h;
    m.bonds_.push_back(bond);
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) interior(node(i, j), node(i + 1, j));
  const BondId first_vertical = m.bond_count();
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i) interior(node(i, j), node(i, j + 1));

  auto ghost = [&](int a, Side s, std::array<double, 2> pos) {
    Bond bond;
    bond.a = a;
    bond.b = -1;
    bond.length = 0.5 * h;
    bond.volume = 0.5 * h * h;
    bond.surface = kappa * h;
    bond.ghost_pos = pos;
    bond.side = s;
    bond.free_boundary = !contains(boundary.dirichlet, s);
    m.bonds_.push_back(bond);
  };
  for (int j = 0; j < ny; ++j) ghost(node(0, j), Side::Left, {0.0, (j + 0.5) * h});
  for (int j = 0; j < ny; ++j) ghost(node(nx - 1, j), Side::Right, {width, (j + 0.5) * h});
  for (int i = 0; i < nx; ++i) ghost(node(i, 0), Side::Bottom, {(i + 0.5) * h, 0.0});
  for (int i = 0; i < nx; ++i) ghost(node(i, ny - 1), Side::Top, {(i + 0.5) * h, height});

  std::vector<BondId> notch_bonds, line_bonds;
  if (notch) {
    const auto& n = *notch;
    const bool horizontal = n.y0 == n.y1 && n.x0 != n.x1;
    const bool vertical = n.x0 == n.x1 && n.y0 != n.y1;
    if (!horizontal && !vertical) throw Error(ErrorKind::InvalidGeometry, "notch must be an axis-aligned segment");
    if (horizontal) {
      const auto row = grid_index(n.y0, h);
      const auto c0 = grid_index(std::min(n.x0, n.x1), h);
      const auto c1 = grid_index(std::max(n.x0, n.x1), h);
      if (!row || !c0 || !c1 || *row <= 0 || *row >= ny || *c0 < 0 || *c1 > nx)
        throw Error(ErrorKind::InvalidGeometry, "notch does not lie on grid facets");
      // vertical bonds between rows row-1 and row
      for (int i = 0; i < nx; ++i) {
        const BondId id = first_vertical + (*row - 1) * nx + i;
        line_bonds.push_back(id);
        if (i >= *c0 && i < *c1) notch_bonds.push_back(id);
      }
    } else {
      const auto col = grid_index(n.x0, h);
      const auto r0 = grid_index(std::min(n.y0, n.y1), h);
      const auto r1 = grid_index(std::max(n.y0, n.y1), h);
      if (!col || !r0 || !r1 || *col <= 0 || *col >= nx || *r0 < 0 || *r1 > ny)
        throw Error(ErrorKind::InvalidGeometry, "notch does not lie on grid facets");
      for (int j = 0; j < ny; ++j) {
        const BondId id = j * (nx - 1) + (*col - 1);
        line_bonds.push_back(id);
        if (j >= *r0 && j < *r1) notch_bonds.push_back(id);
      }
    }
  }
  if (breakable == BreakableSet::NotchLine) {
    if (!notch) throw Error(ErrorKind::InvalidGeometry, "notch-line breakable set needs a notch");
    for (auto& b : m.bonds_) b.breakable = false;
    for (BondId id : line_bonds) m.bonds_[static_cast<std::size_t>(id)].breakable = true;
  }

  m.initial_crack_ = notch_bonds;
  for (BondId id = 0; id < m.bond_count(); ++id)
    if (m.bonds_[static_cast<std::size_t>(id)].free_boundary) m.initial_crack_.push_back(id);
  std::sort(m.initial_crack_.begin(), m.initial_crack_.end());
  m.initial_crack_.erase(std::unique(m.initial_crack_.begin(), m.initial_crack_.end()), m.initial_crack_.end());
  return m;
}

std::vector<BondId> Mesh::breakable_bonds() const {
  std::vector<BondId> out;
  for (BondId id = 0; id < bond_count(); ++id)
    if (bonds_[static_cast<std::size_t>(id)].breakable) out.push_back(id);
  return out;
}

bool Mesh::has_dirichlet() const noexcept {
  return std::any_of(bonds_.begin(), bonds_.end(), [](const Bond& b) { return b.is_ghost() && !b.free_boundary; });
}

std::vector<BondId> Mesh::dirichlet_bonds() const {
  std::vector<BondId> out;
  for (BondId id = 0; id < bond_count(); ++id) {
    const auto& b = bonds_[static_cast<std::size_t>(id)];
    if (b.is_ghost() && !b.free_boundary) out.push_back(id);
  }
  return out;
}

double Mesh::total_volume() const noexcept {
  double v = 0.0;
  for (const auto& b : bonds_) v += b.volume;
  return v;
}

std::array<double, 2> Mesh::bond_midpoint(BondId id) const {
  const auto& b = bond(id);
  const auto pa = node_pos(b.a);
  const auto pb = b.is_ghost() ? b.ghost_pos : node_pos(b.b);
  return {0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])};
}

// ---------------------------------------------------------------------------

Schedule::Schedule(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw Error(ErrorKind::InvalidInput, "schedule needs at least one knot");
  if (knots_.front().first != 0.0) throw Error(ErrorKind::InvalidInput, "schedule must start at t = 0");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].first) || !std::isfinite(knots_[i].second))
      throw Error(ErrorKind::InvalidInput, "schedule knots must be finite");
    if (i > 0 && !(knots_[i].first > knots_[i - 1].first))
      throw Error(ErrorKind::InvalidInput, "schedule knots must be strictly increasing in t");
  }
}

Schedule Schedule::ramp(double rate, double horizon) { return Schedule({{0.0, 0.0}, {horizon, rate * horizon}}); }

double Schedule::value(double t) const {
  if (knots_.size() == 1 || t <= knots_.front().first) return knots_.front().second;
  if (t >= knots_.back().first) return knots_.back().second;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const auto& k) { return v < k.first; });
  const auto& k1 = *it;
  const auto& k0 = *(it - 1);
  if (t == k0.first) return k0.second;
  const double s = (t - k0.first) / (k1.first - k0.first);
  return k0.second + s * (k1.second - k0.second);
}

double Schedule::rate(double t) const {
  if (knots_.size() == 1) return 0.0;
  if (t >= knots_.back().first) {
    // left derivative at the end, zero beyond it
    if (t > knots_.back().first) return 0.0;
    const auto& k1 = knots_.back();
    const auto& k0 = knots_[knots_.size() - 2];
    return (k1.second - k0.second) / (k1.first - k0.first);
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t, [](double v, const auto& k) { return v < k.first; });
  if (it == knots_.begin()) ++it;
  const auto& k1 = *it;
  const auto& k0 = *(it - 1);
  return (k1.second - k0.second) / (k1.first - k0.first);
}

bool AffineField::is_zero() const noexcept {
  for (const auto& c : comps)
    if (c[0] != 0.0 || c[1] != 0.0 || c[2] != 0.0) return false;
  return true;
}

LoadProgram::LoadProgram(AffineField profile, AffineField offset, Schedule schedule, double horizon)
    : profile_(std::move(profile)), offset_(std::move(offset)), schedule_(std::move(schedule)), horizon_(horizon) {
  if (profile_.components() < 1) throw Error(ErrorKind::InvalidInput, "load profile needs at least one component");
  if (offset_.components() == 0) offset_ = AffineField::zero(profile_.components());
  if (offset_.components() != profile_.components())
    throw Error(ErrorKind::InvalidInput, "load offset and profile have different component counts");
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw Error(ErrorKind::InvalidInput, "horizon must be positive");
  if (schedule_.knots().back().first < horizon_ && schedule_.knots().size() > 1)
    throw Error(ErrorKind::InvalidInput, "schedule must cover [0, horizon]");
}

void LoadProgram::check_time(double t) const {
  if (!(t >= 0.0) || t > horizon_ * (1.0 + 1e-12)) throw Error(ErrorKind::OutOfRange, "time outside [0, T]");
}

std::vector<double> LoadProgram::boundary_values(const Mesh& mesh, double t) const {
  check_time(t);
  const int m = components();
  const double r = schedule_.value(t);
  std::vector<double> out(static_cast<std::size_t>(mesh.bond_count() * m), 0.0);
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const auto& b = mesh.bond(id);
    if (!b.is_ghost()) continue;
    for (int c = 0; c < m; ++c)
      out[static_cast<std::size_t>(id * m + c)] = offset_.eval(c, b.ghost_pos) + r * profile_.eval(c, b.ghost_pos);
  }
  return out;
}

std::vector<double> LoadProgram::time_derivative(const Mesh& mesh, double t) const {
  check_time(t);
  const int m = components();
  const double rdot = schedule_.rate(t);
  std::vector<double> out(static_cast<std::size_t>(mesh.bond_count() * m), 0.0);
  for (BondId id = 0; id < mesh.bond_count(); ++id) {
    const auto& b = mesh.bond(id);
    if (!b.is_ghost()) continue;
    for (int c = 0; c < m; ++c) out[static_cast<std::size_t>(id * m + c)] = rdot * profile_.eval(c, b.ghost_pos);
  }
  return out;
}

std::vector<double> LoadProgram::lift(const Mesh& mesh, double t) const {
  check_time(t);
  const int m = components();
  const double r = schedule_.value(t);
  std::vector<double> out(static_cast<std::size_t>(mesh.node_count() * m));
  for (int i = 0; i < mesh.node_count(); ++i)
    for (int c = 0; c < m; ++c)
      out[static_cast<std::size_t>(i * m + c)] = offset_.eval(c, mesh.node_pos(i)) + r * profile_.eval(c, mesh.node_pos(i));
  return out;
}

std::vector<double> LoadProgram::lift_rate(const Mesh& mesh, double t) const {
  check_time(t);
  const int m = components();
  const double rdot = schedule_.rate(t);
  std::vector<double> out(static_cast<std::size_t>(mesh.node_count() * m));
  for (int i = 0; i < mesh.node_count(); ++i)
    for (int c = 0; c < m; ++c) out[static_cast<std::size_t>(i * m + c)] = rdot * profile_.eval(c, mesh.node_pos(i));
  return out;
}

double LoadProgram::sup_boundary_norm(const Mesh& mesh) const {
  std::vector<double> times{0.0, horizon_};
  for (const auto& k : schedule_.knots())
    if (k.first <= horizon_) times.push_back(k.first);
  double sup = 0.0;
  for (double t : times) {
    const auto g = boundary_values(mesh, std::min(t, horizon_));
    const int m = components();
    for (BondId id : mesh.dirichlet_bonds())
      for (int c = 0; c < m; ++c) sup = std::max(sup, std::abs(g[static_cast<std::size_t>(id * m + c)]));
  }
  return sup;
}

void validate_load(const Mesh& mesh, const LoadProgram& load) {
  if (!mesh.has_dirichlet() && !load.profile().is_zero())
    throw Error(ErrorKind::InvalidGeometry, "Dirichlet boundary must be nonempty for a driven problem");
}

}  // namespace fqs
