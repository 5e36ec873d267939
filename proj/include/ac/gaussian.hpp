#pragma once

#include <memory>

#include "ac/core.hpp"
#include "ac/fem.hpp"
#include "ac/grid.hpp"

namespace ac {

// Gaussian reference measures on the lattice field space:
//   nu1(eps): density ~ exp(-1/(2 eps) int |grad h|^2), ramp boundary
//   nu2:      density ~ exp(-1/2 int |grad h|^2),       ramp boundary
//   rho(eps, kappa): ~ exp(-kappa/(2 eps) int |grad h|^2 + h^2), zero boundary
// log_norm is the log of the normalization integral over coefficients.
struct GaussianSpec {
  enum class Kind { nu1, nu2, rho };

  Kind kind;
  double eps = 1, kappa = 1;
  const FemMatrices* fem = nullptr;
  SpMat precision;
  Vec mean;  // free coefficients (ramp field l for nu1/nu2, zero for rho)
  Field::Boundary boundary = Field::Boundary::ramp;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> factor;
  double log_det_precision = 0;
  double log_norm = 0;

  // action of the factor: F v with F^T F = precision (whitening transport)
  Vec factor_apply(const Vec& v) const;
};

GaussianSpec make_nu1(const FemMatrices& fem, double eps);
GaussianSpec make_nu2(const FemMatrices& fem);
GaussianSpec make_rho(const FemMatrices& fem, double eps, double kappa);

Field exact_sample(const GaussianSpec& spec, Rng& rng);

// Lemma 3.1 i: log(Z2/Z1) against the closed form -(N/2) log eps + (1/L)(1/eps - 1)
struct Ratio21 {
  double value = 0, closed_form = 0, rel_err = 0;
  bool pass = false;
};
Ratio21 log_partition_ratio_21(const FemMatrices& fem, double eps);

// Lemma 3.1 ii with a numerically certified Poincare constant
struct Ratio31 {
  double value = 0, lower = 0, upper = 0, poincare_C = 0;
  bool pass = false;
};
Ratio31 log_partition_ratio_31(const FemMatrices& fem, double eps, double kappa);

struct ConcCheck {
  double freq = 0, bound = 0, mc_err = 0;
  bool pass = false;
  bool informative = true;  // bound < 1
};

// Lemma 3.2 i: P(||h||_inf >= delta) under rho vs N exp(-delta^2 kappa lam_min(I) / (2 eps)),
// lam_min(I) from mass_eigen_floor (>= C a^{d+1})
ConcCheck concentration_sup_check(const FemMatrices& fem, double eps, double kappa,
                                  double delta, long n_samples, std::uint64_t seed);
// Lemma 3.2 ii: P(||h||_H1 >= sqrt(eps N / kappa) + r) vs exp(-kappa r^2 / (2 eps))
ConcCheck concentration_h1_check(const FemMatrices& fem, double eps, double kappa, double r,
                                 long n_samples, std::uint64_t seed);
// Lemma 3.3 on a diagonal covariance: P(||x|| >= sqrt(Tr Sigma) + r) vs
// exp(-r^2 / (2 max_i Sigma_ii))
ConcCheck hilbert_concentration_check(const Vec& sigma_diag, double r, long n_samples,
                                      std::uint64_t seed);

}  // namespace ac
