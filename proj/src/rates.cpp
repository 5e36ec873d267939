#include "ac/rates.hpp"


#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace ac {

namespace {

struct Errors {
  double l2sq = 0, h1sq = 0, ip = 0;
};

// piecewise-linear interpolant of the cutoff on nodes k*a, pinned to -+1 at
// k = -+mfloor, constant beyond; errors against m(. - xi) over the whole line
Errors one_phase(const Profile& m, double a, double X1, double LD, long mfloor, double xi,
                 double eps, double lambda1) {
  CutoffProfile mc(m, xi, eps, lambda1);
  std::vector<double> nodes(2 * mfloor + 1);
  for (long k = -mfloor; k <= mfloor; ++k) nodes[k + mfloor] = mc.value(k * a);
  nodes.front() = -1.0;
  nodes.back() = 1.0;

  Errors e;
  const int sub = 64;  // composite Gauss-free Simpson per cell
  for (long k = -mfloor; k < mfloor; ++k) {
    double x0 = k * a;
    double va = nodes[k + mfloor], vb = nodes[k + mfloor + 1];
    double slope = (vb - va) / a;
    double acc2 = 0, acch = 0, accip = 0;
    for (int i = 0; i <= sub; ++i) {
      double w = (i == 0 || i == sub) ? 1 : (i % 2 ? 4 : 2);
      double x = x0 + a * i / sub;
      double pl = va + slope * (x - x0);
      double diff = pl - m.value(x - xi);
      double ddiff = slope - m.derivative(x - xi);
      acc2 += w * diff * diff;
      acch += w * ddiff * ddiff;
      accip += w * diff * m.derivative(x - xi);
    }
    double h3 = a / sub / 3.0;
    e.l2sq += acc2 * h3;
    e.h1sq += acch * h3;
    e.ip -= accip * h3;  // ip accumulates <m - m^eps, m'> = -<m^eps - m, m'>
  }
  // tails: the lattice function is +-1 beyond +-LD; profile primitives are exact
  double s1 = -LD - xi, s2 = LD - xi;
  double p2_inf = 0.5 * m.dm2_total();
  e.l2sq += m.tail_sq(s2) + m.tail_sq(-s1);
  e.h1sq += (p2_inf - m.prim_dm2(s2)) + (m.prim_dm2(s1) + p2_inf);
  double m1 = m.value(s1), m2 = m.value(s2);
  e.ip += -0.5 * (1.0 - m2) * (1.0 - m2) + 0.5 * (1.0 + m1) * (1.0 + m1);
  return e;
}

}  // namespace

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

CutoffRates fit_cutoff_rates(const Profile& profile, double lambda, double alpha,
                             double lambda1, const std::vector<double>& eps_list,
                             int phases) {
  CutoffRates out;
  out.eps = eps_list;
  const double pad = 4.0;
  for (double eps : eps_list) {
    double a = std::pow(eps, alpha);
    double X1 = std::pow(eps, -lambda1);
    double L = std::max(std::pow(eps, -lambda), X1 + 1.0 + pad + a);
    long mfloor = static_cast<long>(std::floor(L / a));
    double LD = mfloor * a;
    double acc2 = 0, acch = 0, accip = 0;
    for (int p = 0; p < phases; ++p) {
      double xi = (p + 0.5) / phases * a;
      Errors e = one_phase(profile, a, X1, LD, mfloor, xi, eps, lambda1);
      acc2 += e.l2sq;
      acch += e.l2sq + e.h1sq;  // H1 norm squared = L2^2 + |d/dx|^2
      accip += std::abs(e.ip);
    }
    out.err_l2.push_back(std::sqrt(acc2 / phases));
    out.err_h1.push_back(std::sqrt(acch / phases));
    out.inner_product.push_back(accip / phases);
  }
  out.slope_l2 = fit_loglog_slope(out.eps, out.err_l2);
  out.slope_h1 = fit_loglog_slope(out.eps, out.err_h1);
  return out;
}

}  // namespace ac
