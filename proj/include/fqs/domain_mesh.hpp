#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fqs {

using BondId = std::int32_t;

enum class Side : std::uint8_t { Left = 0, Right = 1, Bottom = 2, Top = 3 };

/// A breakable link of the lattice. Interior bonds join two nodes; ghost
/// bonds join a node to a ghost point outside the domain where the boundary
/// data lives. A ghost bond of zero length is a pin: while unbroken its node
/// carries the ghost value exactly.
struct Bond {
  std::int32_t a = 0;
  std::int32_t b = -1;          // -1 for ghost bonds
  double length = 0.0;          // node-to-node (or node-to-ghost) distance
  double volume = 0.0;          // elastic quadrature weight
  double surface = 0.0;         // kappa * dual facet measure
  std::array<double, 2> ghost_pos{0.0, 0.0};
  std::optional<Side> side;     // boundary side for ghost bonds
  bool free_boundary = false;   // ghost bond lying on the traction-free boundary
  bool breakable = true;

  bool is_ghost() const noexcept { return b < 0; }
  bool is_pin() const noexcept { return b < 0 && length == 0.0; }
};

struct NotchSpec {
  // Bar: x0 only (position strictly inside one bond). Rectangle: axis-aligned segment.
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

enum class BreakableSet { All, NotchLine };

struct BoundarySpec {
  // Sides carrying Dirichlet data; all other sides are traction-free.
  std::vector<Side> dirichlet{Side::Left, Side::Right, Side::Bottom, Side::Top};
};

/// Node/bond lattice over an interval (N = 1, vertex grid with pins at the
/// end nodes) or a rectangle (N = 2, cell-centred grid with half-length ghost
/// bonds through each boundary facet).
class Mesh {
 public:
  static Mesh bar(double length, int node_count, double kappa, const BoundarySpec& boundary = {},
                  std::optional<double> notch_x = std::nullopt);
  static Mesh rect(double width, double height, double h, double kappa, const BoundarySpec& boundary = {},
                   std::optional<NotchSpec> notch = std::nullopt, BreakableSet breakable = BreakableSet::All);

  int dimension() const noexcept { return dim_; }
  int node_count() const noexcept { return static_cast<int>(x_.size()); }
  int bond_count() const noexcept { return static_cast<int>(bonds_.size()); }
  double h() const noexcept { return h_; }
  double kappa() const noexcept { return kappa_; }
  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }

  std::array<double, 2> node_pos(int i) const noexcept { return {x_[i], y_[i]}; }
  const Bond& bond(BondId id) const { return bonds_.at(static_cast<std::size_t>(id)); }
  std::span<const Bond> bonds() const noexcept { return bonds_; }

  /// Bonds removed from the body before any loading: the notch and every
  /// ghost bond on the traction-free boundary.
  const std::vector<BondId>& initial_crack() const noexcept { return initial_crack_; }
  std::vector<BondId> breakable_bonds() const;

  bool has_dirichlet() const noexcept;
  /// Ghost bonds carrying Dirichlet data (not on the free boundary).
  std::vector<BondId> dirichlet_bonds() const;
  /// Sum of bond elastic weights (|Omega| per gradient direction times N).
  double total_volume() const noexcept;
  /// Position of the midpoint of a bond (ghost bonds: midpoint to ghost point).
  std::array<double, 2> bond_midpoint(BondId id) const;

 private:
  int dim_ = 1;
  double h_ = 0.0, kappa_ = 1.0, width_ = 0.0, height_ = 0.0;
  int nx_ = 0, ny_ = 1;
  std::vector<double> x_, y_;
  std::vector<Bond> bonds_;
  std::vector<BondId> initial_crack_;
};

/// Piecewise-linear time map r(t) given by (t, r) knots starting at t = 0.
class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(std::vector<std::pair<double, double>> knots);
  static Schedule ramp(double rate, double horizon);

  double value(double t) const;
  /// Right derivative (left derivative at the final knot).
  double rate(double t) const;
  const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_{{0.0, 0.0}, {1.0, 1.0}};
};

/// Affine field f(x) = a + b x + c y for each displacement component.
struct AffineField {
  std::vector<std::array<double, 3>> comps;  // one (a, b, c) triple per component

  static AffineField zero(int m) { return AffineField{std::vector<std::array<double, 3>>(static_cast<std::size_t>(m), {0, 0, 0})}; }
  int components() const noexcept { return static_cast<int>(comps.size()); }
  double eval(int comp, std::array<double, 2> pos) const noexcept {
    const auto& c = comps[static_cast<std::size_t>(comp)];
    return c[0] + c[1] * pos[0] + c[2] * pos[1];
  }
  bool is_zero() const noexcept;
};

/// Boundary displacement program g(t) = g0 + r(t) G with G, g0 affine and
/// therefore defined on the whole plane.
class LoadProgram {
 public:
  LoadProgram(AffineField profile, AffineField offset, Schedule schedule, double horizon);

  int components() const noexcept { return profile_.components(); }
  double horizon() const noexcept { return horizon_; }
  const AffineField& profile() const noexcept { return profile_; }
  const AffineField& offset() const noexcept { return offset_; }
  const Schedule& schedule() const noexcept { return schedule_; }

  /// Ghost values for every bond (row-major bond x component; zero for interior bonds).
  std::vector<double> boundary_values(const Mesh& mesh, double t) const;
  std::vector<double> time_derivative(const Mesh& mesh, double t) const;
  /// g(t) lifted onto the mesh nodes (node x component).
  std::vector<double> lift(const Mesh& mesh, double t) const;
  /// Lift of the rate field ġ(t) onto the nodes.
  std::vector<double> lift_rate(const Mesh& mesh, double t) const;
  /// sup over [0, T] of the largest ghost value magnitude.
  double sup_boundary_norm(const Mesh& mesh) const;

 private:
  void check_time(double t) const;

  AffineField profile_;
  AffineField offset_;
  Schedule schedule_;
  double horizon_;
};

/// Rejects meshes whose load program drives the body without any Dirichlet part.
void validate_load(const Mesh& mesh, const LoadProgram& load);

}  // namespace fqs
