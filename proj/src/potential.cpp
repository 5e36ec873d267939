#include "ac/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ac {

double Potential::horner(const std::vector<double>& c, double u) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * u + *it;
  return r;
}

namespace {

std::vector<double> differentiate(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(double(k) * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

// sup |p(u)| on [lo, hi] for a polynomial: dense sampling plus local ternary
// refinement around the best sample.
double sup_abs(const std::vector<double>& c, double lo, double hi) {
  auto f = [&](double u) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * u + *it;
    return std::abs(r);
  };
  const int ns = 4000;
  double best = 0.0, arg = lo;
  for (int i = 0; i <= ns; ++i) {
    double u = lo + (hi - lo) * i / ns;
    double v = f(u);
    if (v > best) best = v, arg = u;
  }
  double a = std::max(lo, arg - (hi - lo) / ns);
  double b = std::min(hi, arg + (hi - lo) / ns);
  for (int it = 0; it < 200; ++it) {
    double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (f(m1) < f(m2))
      a = m1;
    else
      b = m2;
  }
  return std::max(best, f(0.5 * (a + b)));
}

}  // namespace

void Potential::finalize() {
  d1_ = differentiate(coeffs_);
  d2_ = differentiate(d1_);
  d3_ = differentiate(d2_);

  auto fail = [](const std::string& what) {
    throw std::invalid_argument("inadmissible potential: " + what);
  };
  const double tol = 1e-10;
  if (std::abs(eval(1.0)) > tol || std::abs(eval(-1.0)) > tol) fail("F(+-1) != 0");
  for (int i = 0; i <= 600; ++i) {
    double u = -3.0 + 6.0 * i / 600;
    if (std::abs(eval(u) - eval(-u)) > tol * (1 + std::abs(eval(u)))) fail("F not symmetric");
    if (std::min(std::abs(u - 1), std::abs(u + 1)) > 0.05 && eval(u) <= 0)
      fail("F not positive away from +-1");
  }
  if (std::abs(d1(0.0)) > tol || std::abs(d1(1.0)) > tol || std::abs(d1(-1.0)) > tol)
    fail("F' must vanish at 0, +-1");
  if (!(d2(0.0) < 0)) fail("F''(0) must be negative");
  if (!(d2(1.0) > 0 && d2(-1.0) > 0)) fail("F''(+-1) must be positive");

  sup_d2_on_unit_ = sup_abs(d2_, -1.0, 1.0);
  sup_d3_on_double_ = sup_abs(d3_, -2.0, 2.0);
  c3_ = 0.5 * sup_d2_on_unit_ + sup_d3_on_double_;
}

Potential Potential::quartic() {
  Potential p;
  p.kind_ = Kind::quartic;
  p.coeffs_ = {0.25, 0.0, -0.5, 0.0, 0.25};  // (u^2-1)^2/4
  p.finalize();
  return p;
}

Potential Potential::custom(std::vector<double> coeffs) {
  Potential p;
  p.kind_ = Kind::custom;
  p.coeffs_ = std::move(coeffs);
  p.finalize();
  return p;
}

Potential make_quartic_potential() { return Potential::quartic(); }

}  // namespace ac
