#pragma once

#include <optional>
#include <utility>

#include "ac/core.hpp"
#include "ac/fem.hpp"
#include "ac/grid.hpp"
#include "ac/profile.hpp"

namespace ac {

// Fermi coordinates of a field: translation xi, fluctuation v (nodal values of
// h minus the carrier field at xi, a zero-boundary vector), the L2(D) distance
// to the smooth minimizer family, and the orthogonality residual
// <h - m_xi, dx m_xi> left after Newton.
struct TubularCoords {
  double xi = 0;
  Field v;
  double dist = 0;
  double orth_residual = 0;
};

struct FermiGradient {
  Vec analytic;       // d xi / d h_z over free nodes
  double norm_bound;  // 2^{d+1} a^{(d+1)/2} ||dx m|| / |denominator|
  double denominator;
};

// Sample an x-only function as a lattice field (nodal values f(x)).
Field sample_xfunc_field(const GridSpec& grid, Field::Boundary b,
                         const std::function<double(double)>& f);

// The cutoff profile m_xi^eps as a lattice field. Rejects xi outside
// [-L + eps^{-lambda1} + 1, L - eps^{-lambda1} - 1] (std::domain_error).
Field cutoff_profile_field(const Profile& profile, double xi, double eps, double lambda1,
                           const GridSpec& grid);

class ManifoldProjector {
 public:
  ManifoldProjector(const FemMatrices& fem, const Profile& profile);

  // carriers become grid-sampled cutoff profiles whenever the window admits xi
  void set_carrier_cutoff(double eps, double lambda1) { cutoff_ = {eps, lambda1}; }

  TubularCoords project(const Field& h) const;
  double dist_to_manifold(const Field& h) const;
  std::pair<double, double> dist_and_xi(const Field& h) const;
  FermiGradient fermi_gradient(const Field& h) const;

  Field carrier(double xi) const;
  double tangent_norm_sq() const { return tangent_norm_sq_; }

  // L2(D) primitives against the smooth profile (per-simplex Gauss in x with
  // exact transverse slicing, plus analytic tails beyond |x| = LD)
  double dist_sq_at(const Vec& ext, double h_mass_sq, double xi) const;
  double residual(const Vec& ext, double xi) const;
  double residual_deriv(const Vec& ext, double xi) const;

  const FemMatrices& fem() const { return *fem_; }
  const Profile& profile() const { return *profile_; }

 private:
  struct CutoffParams {
    double eps, lambda1;
  };
  std::pair<double, double> scan_newton(const Vec& ext, double h_mass_sq,
                                        bool ambiguity_check) const;

  const FemMatrices* fem_;
  const Profile* profile_;
  std::optional<CutoffParams> cutoff_;
  double tangent_norm_sq_ = 0;
  double tail_span_ = 0;  // quadrature cut for the exponential tails
};

}  // namespace ac
