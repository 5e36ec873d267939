#pragma once

#include <functional>

#include "ac/core.hpp"
#include "ac/fem.hpp"
#include "ac/grid.hpp"
#include "ac/potential.hpp"
#include "ac/profile.hpp"
#include "ac/tubular.hpp"

namespace ac {

struct EnergyReport {
  double gradient_part = 0;   // (1/2) int |grad h|^2
  double potential_part = 0;  // int F(h)
  double total_raw = 0;
  double free_energy = 0;     // total_raw - C*
};

// Free energy of lattice fields: exact stiffness quadratic form plus exact
// per-simplex polynomial quadrature of F. The constant +-1 exterior
// contributes nothing (F(+-1) = 0).
class EnergyModel {
 public:
  EnergyModel(const FemMatrices& fem, const Potential& potential, double c_star);

  EnergyReport report(const Field& h) const;
  double total_raw_ext(const Vec& ext) const;
  Vec gradient_ext(const Vec& ext) const;  // over free nodes

  EnergyReport free_energy(const Field& h) const { return report(h); }
  Vec energy_gradient(const Field& h) const { return gradient_ext(h.ext_values()); }

  const FemMatrices& fem() const { return *fem_; }
  const Potential& potential() const { return *potential_; }
  double c_star() const { return c_star_; }

 private:
  const FemMatrices* fem_;
  const Potential* potential_;
  double c_star_;
};

// Prop 2.1 i with the cutoff profile as carrier, evaluated on a refined grid
// so that only the certified carrier error enters the slack.
struct UpperCheck {
  double lhs = 0;        // F(m_xi^eps + v), refined evaluation
  double rhs = 0;        // c3 ||v||_{H1}^2
  double slack = 0;      // c3 (2 E ||v||_H1 + E^2), E = ||carrier - m_xi||_{H1}
  double carrier_h1_err = 0;
  bool pass = false;
};

class LandscapeUpperChecker {
 public:
  LandscapeUpperChecker(const FemMatrices& fem, const Potential& potential,
                        const Profile& profile, double eps, double lambda1,
                        int refine = 8);
  // v must be zero-boundary with ||v||_L2 <= delta3, ||v||_inf <= 1 and
  // numerically orthogonal to dx m_xi (throws std::invalid_argument)
  UpperCheck check(double xi, const Field& v) const;

  double delta3 = 0.2;
  // builds an admissible perturbation from white noise: orthogonalized, scaled
  Field random_admissible(double xi, double target_l2, Rng& rng) const;

 private:
  const FemMatrices* fem_;
  const Potential* potential_;
  const Profile* profile_;
  double eps_, lambda1_, c_star_;
  GridSpec fine_grid_;
  FemMatrices fine_fem_;
  int refine_;
};

// Prop 2.1 ii probe: minimize F subject to dist(h, M) >= delta by projected
// gradient descent with reflection off the tube boundary.
struct LowerProbeResult {
  double c0_estimate = 0;
  double min_energy = 0;
  Field minimizer;
  bool feasible = false;
};

LowerProbeResult landscape_lower_probe(const EnergyModel& energy,
                                       const ManifoldProjector& projector, double delta,
                                       int trials, std::uint64_t seed, int max_iters = 300);

// Lemma 2.3: slice inequality at dimension d = n+1 >= 1, lattice-aligned
// slices in the last transverse coordinate.
struct SliceCheck {
  double lhs = 0, rhs = 0;
  bool pass = false;
};

class SliceChecker {
 public:
  SliceChecker(const FemMatrices& fem, const Profile& profile);
  SliceCheck check(const Field& h) const;

 private:
  const FemMatrices* fem_;
  const Profile* profile_;
  GridSpec slice_grid_;
  FemMatrices slice_fem_;
  ManifoldProjector proj_full_, proj_slice_;
};

}  // namespace ac
