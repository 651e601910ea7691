#include "fqs/energy_model.hpp"

#include <algorithm>
#include <cmath>

#include "fqs/error.hpp"

namespace fqs {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidMesh: return "invalid-mesh";
    case ErrorKind::InvalidGeometry: return "invalid-geometry";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::Nonconvergence: return "nonconvergence";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Version: return "version-mismatch";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::InvariantViolation: return "invariant-violation";
  }
  return "unknown";
}

namespace {

void validate_common(double p, double coefficient, double growth_c) {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidInput, "exponent p must lie in (1, inf)");
  if (!(coefficient > 0.0) || !std::isfinite(coefficient))
    throw Error(ErrorKind::InvalidInput, "coefficient must be positive");
  if (!(growth_c >= 1.0) || !std::isfinite(growth_c))
    throw Error(ErrorKind::InvalidInput, "growth constant C must be >= 1");
}

double squared_norm(std::span<const double> xi) {
  double s = 0.0;
  for (double x : xi) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidInput, "non-finite gradient entry");
    s += x * x;
  }
  return s;
}

double norm(std::span<const double> xi) { return std::sqrt(squared_norm(xi)); }

}  // namespace

EnergyDensity EnergyDensity::quadratic(double growth_c) {
  validate_common(2.0, 1.0, growth_c);
  EnergyDensity d;
  d.form_ = Form::Quadratic;
  d.p_ = 2.0;
  d.coefficient_ = 1.0;
  d.growth_c_ = growth_c;
  d.dw_constant_ = 2.0;
  return d;
}

EnergyDensity EnergyDensity::scaled_quadratic(double coefficient, double growth_c) {
  validate_common(2.0, coefficient, growth_c);
  EnergyDensity d;
  d.form_ = Form::ScaledQuadratic;
  d.p_ = 2.0;
  d.coefficient_ = coefficient;
  d.growth_c_ = growth_c;
  d.dw_constant_ = std::max(1.0, 2.0 * coefficient);
  return d;
}

EnergyDensity EnergyDensity::p_power(double p, double coefficient, double growth_c) {
  validate_common(p, coefficient, growth_c);
  EnergyDensity d;
  d.form_ = Form::PPower;
  d.p_ = p;
  d.coefficient_ = coefficient;
  d.growth_c_ = growth_c;
  // |DW| = a p |xi|^{p-1} <= a p (1 + |xi|^{p-1})
  d.dw_constant_ = std::max(1.0, coefficient * p);
  return d;
}

EnergyDensity EnergyDensity::custom(double p, double growth_c, double dw_constant, ScalarFn w, GradFn dw) {
  validate_common(p, 1.0, growth_c);
  if (!w || !dw) throw Error(ErrorKind::InvalidInput, "custom density needs both W and DW callbacks");
  if (!(dw_constant >= 1.0)) throw Error(ErrorKind::InvalidInput, "DW growth constant must be >= 1");
  EnergyDensity d;
  d.form_ = Form::Custom;
  d.p_ = p;
  d.growth_c_ = growth_c;
  d.dw_constant_ = dw_constant;
  d.custom_w_ = std::move(w);
  d.custom_dw_ = std::move(dw);
  return d;
}

EnergyDensity EnergyDensity::from_name(std::string_view form, double p, double coefficient, double growth_c) {
  if (form == "quadratic") {
    if (p != 2.0) throw Error(ErrorKind::InvalidInput, "quadratic density requires p = 2");
    if (coefficient != 1.0) throw Error(ErrorKind::InvalidInput, "quadratic density has coefficient 1; use scaled-quadratic");
    return quadratic(growth_c);
  }
  if (form == "scaled-quadratic") {
    if (p != 2.0) throw Error(ErrorKind::InvalidInput, "scaled-quadratic density requires p = 2");
    return scaled_quadratic(coefficient, growth_c);
  }
  if (form == "p-power") return p_power(p, coefficient, growth_c);
  throw Error(ErrorKind::InvalidInput, "unknown density form '" + std::string(form) + "'");
}

std::string_view EnergyDensity::form_name() const noexcept {
  switch (form_) {
    case Form::Quadratic: return "quadratic";
    case Form::ScaledQuadratic: return "scaled-quadratic";
    case Form::PPower: return "p-power";
    case Form::Custom: return "custom";
  }
  return "custom";
}

double EnergyDensity::w_of_norm(double r) const noexcept {
  switch (form_) {
    case Form::Quadratic: return r * r;
    case Form::ScaledQuadratic: return coefficient_ * r * r;
    case Form::PPower: return coefficient_ * std::pow(r, p_);
    case Form::Custom: break;
  }
  return 0.0;
}

double EnergyDensity::dw_over_r(double r) const noexcept {
  switch (form_) {
    case Form::Quadratic: return 2.0;
    case Form::ScaledQuadratic: return 2.0 * coefficient_;
    case Form::PPower: return r > 0.0 ? coefficient_ * p_ * std::pow(r, p_ - 2.0) : 0.0;  // DW(0) = 0
    case Form::Custom: break;
  }
  return 0.0;
}

double EnergyDensity::d2w_of_norm(double r) const noexcept {
  switch (form_) {
    case Form::Quadratic: return 2.0;
    case Form::ScaledQuadratic: return 2.0 * coefficient_;
    case Form::PPower: return r > 0.0 ? coefficient_ * p_ * (p_ - 1.0) * std::pow(r, p_ - 2.0) : 0.0;
    case Form::Custom: break;
  }
  return 0.0;
}

double EnergyDensity::eval_w(std::span<const double> xi) const {
  const double r2 = squared_norm(xi);
  if (form_ == Form::Custom) return custom_w_(xi);
  if (is_quadratic()) return coefficient_ * r2;  // no sqrt round trip
  return w_of_norm(std::sqrt(r2));
}

void EnergyDensity::eval_dw(std::span<const double> xi, std::span<double> out) const {
  if (out.size() != xi.size()) throw Error(ErrorKind::InvalidInput, "DW output size mismatch");
  const double r = norm(xi);
  if (form_ == Form::Custom) {
    custom_dw_(xi, out);
    return;
  }
  const double s = dw_over_r(r);
  for (std::size_t i = 0; i < xi.size(); ++i) out[i] = s * xi[i];
}

std::vector<double> EnergyDensity::eval_dw(std::span<const double> xi) const {
  std::vector<double> out(xi.size());
  eval_dw(xi, out);
  return out;
}

GrowthReport check_growth(const EnergyDensity& density, std::span<const std::vector<double>> samples) {
  if (samples.empty()) throw Error(ErrorKind::InvalidInput, "growth check needs at least one sample");
  const double c = density.growth_c();
  const double cd = density.dw_constant();
  const double p = density.p();
  // Roundoff slack only; the bounds are otherwise exact.
  auto slack = [](double v) { return 1e-12 * std::max(1.0, std::abs(v)); };
  GrowthReport report;
  for (const auto& xi : samples) {
    const double w = density.eval_w(xi);
    double r = 0.0;
    for (double x : xi) r += x * x;
    r = std::sqrt(r);
    const double rp = std::pow(r, p);
    const double lower = rp / c - c;
    const double upper = c * rp + c;
    if (w < 0.0) report.violations.push_back({GrowthViolation::Bound::Negative, xi, w, 0.0});
    if (w < lower - slack(lower)) report.violations.push_back({GrowthViolation::Bound::Lower, xi, w, lower});
    if (w > upper + slack(upper)) report.violations.push_back({GrowthViolation::Bound::Upper, xi, w, upper});
    const auto dw = density.eval_dw(xi);
    double dn = 0.0;
    for (double x : dw) dn += x * x;
    dn = std::sqrt(dn);
    const double dlim = cd * (1.0 + std::pow(r, p - 1.0));
    if (dn > dlim + slack(dlim)) report.violations.push_back({GrowthViolation::Bound::Derivative, xi, dn, dlim});
  }
  return report;
}

std::vector<std::vector<double>> growth_samples(std::size_t dim, double radius, int lattice_per_axis,
                                                int random_draws, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  if (dim == 0) return out;
  const int k = std::max(lattice_per_axis, 2);
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim && total < 100000; ++d) total *= static_cast<std::size_t>(k);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<double> xi(dim, 0.0);
    std::size_t rem = idx;
    for (std::size_t d = 0; d < dim; ++d) {
      const int j = static_cast<int>(rem % static_cast<std::size_t>(k));
      rem /= static_cast<std::size_t>(k);
      xi[d] = -radius + 2.0 * radius * j / (k - 1);
    }
    out.push_back(std::move(xi));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, radius / 2.0);
  for (int i = 0; i < random_draws; ++i) {
    std::vector<double> xi(dim);
    for (auto& x : xi) x = normal(rng);
    out.push_back(std::move(xi));
  }
  return out;
}

}  // namespace fqs
