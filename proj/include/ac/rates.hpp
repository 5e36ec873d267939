#pragma once

#include <vector>

#include "ac/profile.hpp"

namespace ac {

// Lemma 2.4 rate study: for each eps, sample the cutoff profile on a 1D
// lattice of spacing a = eps^alpha, on a domain large enough to contain the
// cutoff construction, and measure the L2(R) and H1(R) errors against the
// smooth profile plus |<m - m^eps, dx m>|. Errors are averaged over the grid
// phase (the lemma holds for every admissible xi). Slopes are least-squares
// fits of log(err) against log(eps).
struct CutoffRates {
  std::vector<double> eps, err_l2, err_h1, inner_product;
  double slope_l2 = 0, slope_h1 = 0;
};

CutoffRates fit_cutoff_rates(const Profile& profile, double lambda, double alpha,
                             double lambda1, const std::vector<double>& eps_list,
                             int phases = 16);

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ac
