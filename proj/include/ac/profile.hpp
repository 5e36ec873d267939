#pragma once

#include <memory>
#include <vector>

#include "ac/potential.hpp"

namespace ac {

// Heteroclinic transition profile m solving m' = sqrt(2 F(m)), m(0) = 0,
// together with its exponential tail certificates (c1, c2) and the surface
// tension C* = int_{-1}^{1} sqrt(2F) du.
class Profile {
 public:
  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  // one-argument primitives used by the tubular-coordinate integrals
  double prim_one_minus_m2(double s) const;  // int_0^s (1 - m^2)
  double prim_dm2(double s) const;           // int_0^s (m')^2
  double tail_sq(double s) const;            // int_s^inf (1 - m)^2
  double dm2_total() const;                  // int_R (m')^2

  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double surface_tension() const { return surface_tension_; }
  bool closed_form() const { return closed_form_; }

 private:
  friend Profile solve_profile(const Potential& potential);

  bool closed_form_ = true;  // quartic: tanh(x / sqrt 2)
  double c1_ = 0, c2_ = 0, surface_tension_ = 0;

  // dense ODE solution on x >= 0 (odd extension for x < 0), cubic Hermite
  // between accepted steps, linearized tail beyond x_switch_
  struct OdeTable {
    std::vector<double> x, m, mp;
    double x_switch = 0, m_switch = 0, rate = 0;
    // cumulative primitives on a uniform grid over [0, span]
    double prim_step = 0, prim_span = 0;
    std::vector<double> prim_t;   // int_0^s (1 - m^2)
    std::vector<double> prim_p2;  // int_0^s (m')^2
    std::vector<double> prim_a;   // int_s^inf (1 - m)^2, s in [-span, span]
  };
  std::shared_ptr<OdeTable> table_;
  std::shared_ptr<const Potential> potential_;
  void build_primitives();
};

// Quartic potentials get the closed form; custom potentials are integrated
// adaptively. Throws NoConvergence if |m| fails to reach 1 - 1e-6 by x = 100.
Profile solve_profile(const Potential& potential);

// Adaptive quadrature of sqrt(2F) over [-1,1] with endpoint substitution
// u = +-(1 - t^2).
double surface_tension(const Potential& potential);
double surface_tension_analytic_quartic();  // 2 sqrt(2) / 3

// Smooth cutoff profile \tilde m^eps centered at xi: coincides with m on
// [xi - X1, xi + X1] (X1 = eps^{-lambda1}), equals +-1 beyond xi +- (X1 + 1),
// and blends monotonically in between with a quintic smoothstep started at
// the midpoint of the unit transition interval.
class CutoffProfile {
 public:
  CutoffProfile(const Profile& profile, double xi, double eps, double lambda1);

  double value(double x) const;
  double derivative(double x) const;
  double xi() const { return xi_; }
  double core_halfwidth() const { return X1_; }
  // paper bound on the blend derivative: 2 c1 c2 exp(-c2 X1)
  double derivative_bound() const;

  static constexpr double kBlendStart = 0.5;  // fraction of the unit interval

 private:
  const Profile* profile_;
  double xi_, X1_;
};

}  // namespace ac
