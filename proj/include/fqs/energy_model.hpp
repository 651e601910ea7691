#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fqs {

/// Bulk energy density W acting on a gradient matrix stored row-major as a
/// flat span (m*N entries). All shipped forms are convex functions of |xi|.
///
///   quadratic         W = |xi|^2
///   scaled-quadratic  W = a |xi|^2
///   p-power           W = a |xi|^p
///   custom            user callbacks; excluded from global-minimality claims
class EnergyDensity {
 public:
  enum class Form { Quadratic, ScaledQuadratic, PPower, Custom };

  using ScalarFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

  static EnergyDensity quadratic(double growth_c = 1.0);
  static EnergyDensity scaled_quadratic(double coefficient, double growth_c);
  static EnergyDensity p_power(double p, double coefficient, double growth_c);
  /// `dw_constant` is the constant C' in |DW(xi)| <= C'(1 + |xi|^{p-1});
  /// the caller vouches for it since nothing about the callback is known.
  static EnergyDensity custom(double p, double growth_c, double dw_constant, ScalarFn w, GradFn dw);

  /// Build from the names used in run configs ("quadratic", "scaled-quadratic", "p-power").
  static EnergyDensity from_name(std::string_view form, double p, double coefficient, double growth_c);

  Form form() const noexcept { return form_; }
  std::string_view form_name() const noexcept;
  double p() const noexcept { return p_; }
  double coefficient() const noexcept { return coefficient_; }
  double growth_c() const noexcept { return growth_c_; }
  double dw_constant() const noexcept { return dw_constant_; }
  bool is_quadratic() const noexcept { return form_ == Form::Quadratic || form_ == Form::ScaledQuadratic; }
  bool is_convex() const noexcept { return form_ != Form::Custom; }

  double eval_w(std::span<const double> xi) const;
  /// Writes DW(xi) into `out` (same size as xi).
  void eval_dw(std::span<const double> xi, std::span<double> out) const;
  std::vector<double> eval_dw(std::span<const double> xi) const;

  // Unchecked scalar-radius helpers for the hot loops: W and W'(r)/r as functions of r = |xi|.
  double w_of_norm(double r) const noexcept;
  double dw_over_r(double r) const noexcept;
  /// Second radial derivative W''(r), used by the Newton solver.
  double d2w_of_norm(double r) const noexcept;

 private:
  EnergyDensity() = default;

  Form form_ = Form::Quadratic;
  double p_ = 2.0;
  double coefficient_ = 1.0;
  double growth_c_ = 1.0;
  double dw_constant_ = 2.0;
  ScalarFn custom_w_;
  GradFn custom_dw_;
};

struct GrowthViolation {
  enum class Bound { Lower, Upper, Derivative, Negative };
  Bound bound;
  std::vector<double> xi;
  double value;  // W(xi), or |DW(xi)| for derivative violations
  double limit;
};

struct GrowthReport {
  std::vector<GrowthViolation> violations;
  bool passed() const noexcept { return violations.empty(); }
};

/// Checks the two-sided growth bound and the derivative bound on every sample.
GrowthReport check_growth(const EnergyDensity& density, std::span<const std::vector<double>> samples);

/// Deterministic lattice of gradients in [-radius, radius]^dim plus `random_draws`
/// Gaussian draws scaled to the same radius.
std::vector<std::vector<double>> growth_samples(std::size_t dim, double radius, int lattice_per_axis,
                                                int random_draws, std::uint64_t seed);

}  // namespace fqs
