#pragma once

#include <functional>
#include <span>
#include <string>

namespace evqr {

/// Compactly supported kernel density on R^p with support in the closed unit ball.
///
/// Constants entering asymptotic variance formulas (the squared L2 norm and
/// the sup norm) are computed once at construction. Instances are immutable.
class KernelSpec {
public:
  using Profile = std::function<double(std::span<const double>)>;

  /// Univariate kernel from its density on [-1, 1]. Integrates the density
  /// and its square by adaptive quadrature; throws InvalidArgument when the
  /// density does not integrate to 1 within 1e-8.
  static KernelSpec univariate(std::string name, std::function<double(double)> density);

  /// Kernel on R^p with caller-supplied constants (no quadrature for p > 1).
  static KernelSpec multivariate(std::string name, int dim, Profile density,
                                 double l2_norm_sq, double sup_norm);

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  double support_radius() const noexcept { return 1.0; }
  double l2_norm_sq() const noexcept { return l2_norm_sq_; }
  double sup_norm() const noexcept { return sup_norm_; }

  /// K(u); zero whenever |u| > 1.
  double evaluate(std::span<const double> u) const;
  double evaluate(double u) const;

private:
  KernelSpec(std::string name, int dim, Profile density, double l2, double sup);

  std::string name_;
  int dim_ = 1;
  Profile density_;
  double l2_norm_sq_ = 0.0;
  double sup_norm_ = 0.0;
};

/// K(t) = 35/32 (1 - t^2)^3 on [-1, 1], with closed-form constants.
KernelSpec triweight();

/// Radial triweight c_p (1 - |t|^2)^3 on the unit ball of R^p; equals triweight() for p = 1.
KernelSpec radial_triweight(int dim);

/// K_h(u) = K(u / h) / h^p. Throws InvalidArgument for h <= 0.
double scaled_eval(const KernelSpec& k, double h, std::span<const double> u);
double scaled_eval(const KernelSpec& k, double h, double u);

}  // namespace evqr
