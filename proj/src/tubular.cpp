#include "ac/tubular.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ac {

Field sample_xfunc_field(const GridSpec& grid, Field::Boundary b,
                         const std::function<double(double)>& f) {
  Field out(grid, b);
  std::vector<long> j;
  for (long idx = 0; idx < grid.ext_count(); ++idx) {
    long k;
    grid.ext_coords(idx, k, j);
    if (grid.is_free_layer(k)) out.coeffs[grid.free_index(k, j)] = f(k * grid.a);
  }
  return out;
}

Field cutoff_profile_field(const Profile& profile, double xi, double eps, double lambda1,
                           const GridSpec& grid) {
  double X1 = std::pow(eps, -lambda1);
  double lo = -grid.LD + X1 + 1.0, hi = grid.LD - X1 - 1.0;
  if (!(xi >= lo && xi <= hi))
    throw std::domain_error("cutoff_profile: xi outside the admissible window");
  CutoffProfile mc(profile, xi, eps, lambda1);
  return sample_xfunc_field(grid, Field::Boundary::ramp,
                            [&](double x) { return mc.value(x); });
}

ManifoldProjector::ManifoldProjector(const FemMatrices& fem, const Profile& profile)
    : fem_(&fem), profile_(&profile) {
  tail_span_ = 45.0 / profile.c2();
  tangent_norm_sq_ = profile.dm2_total();
}

Field ManifoldProjector::carrier(double xi) const {
  const GridSpec& g = fem_->grid;
  if (cutoff_) {
    double X1 = std::pow(cutoff_->eps, -cutoff_->lambda1);
    if (std::abs(xi) <= g.LD - X1 - 1.0)
      return cutoff_profile_field(*profile_, xi, cutoff_->eps, cutoff_->lambda1, g);
  }
  return sample_xfunc_field(g, Field::Boundary::ramp,
                            [&](double x) { return profile_->value(x - xi); });
}

// ||h - m_xi||^2 over D = R x (0,1)^d for ramp fields: mass form for h^2 on
// [-LD, LD], slice quadrature for the cross term, profile primitives for the
// m^2 part and the exponential tails where h is identically +-1.
double ManifoldProjector::dist_sq_at(const Vec& ext, double h_mass_sq, double xi) const {
  const GridSpec& g = fem_->grid;
  const Profile& m = *profile_;
  double cross =
      integrate_field_xfunc(*fem_, ext, [&](double x) { return m.value(x - xi); });
  double s1 = -g.LD - xi, s2 = g.LD - xi;  // profile-frame endpoints
  double msq = (s2 - s1) - (m.prim_one_minus_m2(s2) - m.prim_one_minus_m2(s1));
  double core = h_mass_sq - 2.0 * cross + msq;
  // int_{LD}^{inf} (1 - m(x-xi))^2 + int_{-inf}^{-LD} (-1 - m(x-xi))^2
  return core + m.tail_sq(s2) + m.tail_sq(-s1);
}

double ManifoldProjector::residual(const Vec& ext, double xi) const {
  const GridSpec& g = fem_->grid;
  const Profile& m = *profile_;
  double cross =
      integrate_field_xfunc(*fem_, ext, [&](double x) { return m.derivative(x - xi); });
  double s1 = -g.LD - xi, s2 = g.LD - xi;
  double m1 = m.value(s1), m2 = m.value(s2);
  double mm = 0.5 * (m2 * m2 - m1 * m1);
  // tails: int (1-m) m' = (1-m(s2))^2/2 ; int (-1-m) m' = -(1+m(s1))^2/2
  double tails = 0.5 * (1.0 - m2) * (1.0 - m2) - 0.5 * (1.0 + m1) * (1.0 + m1);
  return cross - mm + tails;
}

double ManifoldProjector::residual_deriv(const Vec& ext, double xi) const {
  const GridSpec& g = fem_->grid;
  const Profile& m = *profile_;
  double cross = integrate_field_xfunc(
      *fem_, ext, [&](double x) { return m.second_derivative(x - xi); });
  double s1 = -g.LD - xi, s2 = g.LD - xi;
  double m1 = m.value(s1), m2 = m.value(s2);
  double d1 = m.derivative(s1), d2 = m.derivative(s2);
  double p2_1 = m.prim_dm2(s1), p2_2 = m.prim_dm2(s2), p2_inf = 0.5 * tangent_norm_sq_;
  // int_core m m'' = [m m'] - int m'^2
  double mm = (m2 * d2 - m1 * d1) - (p2_2 - p2_1);
  // upper tail: int_{s2}^inf (1-m) m'' = -(1-m2) d2 + (P2(inf) - P2(s2))
  // lower tail: int_{-inf}^{s1} (-1-m) m'' = -(1+m1) d1 + (P2(s1) + P2(inf))
  double tails = -(1.0 - m2) * d2 + (p2_inf - p2_2) - (1.0 + m1) * d1 + (p2_1 + p2_inf);
  return tangent_norm_sq_ - (cross - mm + tails);
}

std::pair<double, double> ManifoldProjector::scan_newton(const Vec& ext, double h_mass_sq,
                                                         bool ambiguity_check) const {
  const GridSpec& g = fem_->grid;
  // projections inside the tube scan [-L+1, L-1]; the bare infimum scans wider
  // so that out-of-tube fields cannot park their minimum past the window edge
  double w = ambiguity_check ? std::max(g.LD - 1.0, 2.0 * g.a) : g.LD + 1.0;
  std::vector<double> xis, vals;
  for (double xi = -w; xi <= w + 1e-12; xi += g.a) {
    xis.push_back(xi);
    vals.push_back(dist_sq_at(ext, h_mass_sq, xi));
  }
  std::vector<std::size_t> minima;
  for (std::size_t i = 0; i < xis.size(); ++i) {
    bool lo = (i == 0) || vals[i] <= vals[i - 1];
    bool hi = (i + 1 == xis.size()) || vals[i] <= vals[i + 1];
    if (lo && hi) minima.push_back(i);
  }
  std::sort(minima.begin(), minima.end(),
            [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  if (ambiguity_check && minima.size() >= 2) {
    double d1 = std::sqrt(vals[minima[0]]), d2 = std::sqrt(vals[minima[1]]);
    if (std::abs(xis[minima[0]] - xis[minima[1]]) > 2.5 * g.a && d2 <= 1.01 * d1)
      throw AmbiguousProjection("two projection basins within 1%");
  }

  double xi = xis[minima[0]];
  double best_scan = vals[minima[0]];
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    double r = residual(ext, xi);
    if (std::abs(r) <= 1e-12) {
      converged = true;
      break;
    }
    double dr = residual_deriv(ext, xi);
    if (!(dr > 1e-10)) break;  // left the convex basin
    xi -= r / dr;              // dist^2 has derivative 2 r; Newton on the root of r
  }
  if (!converged) {
    // golden-section fallback on the bracket around the scan minimum
    double a = xi - g.a, b = xi + g.a;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = dist_sq_at(ext, h_mass_sq, c), fd = dist_sq_at(ext, h_mass_sq, d);
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = dist_sq_at(ext, h_mass_sq, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = dist_sq_at(ext, h_mass_sq, d);
      }
    }
    xi = 0.5 * (a + b);
  }
  double dsq = std::min(best_scan, dist_sq_at(ext, h_mass_sq, xi));
  return {xi, std::sqrt(std::max(0.0, dsq))};
}

std::pair<double, double> ManifoldProjector::dist_and_xi(const Field& h) const {
  if (h.boundary != Field::Boundary::ramp)
    throw std::invalid_argument("manifold distance needs a ramp-boundary field");
  Vec ext = h.ext_values();
  double hm = ext.dot(fem_->mass_ext * ext);
  auto [xi, dist] = scan_newton(ext, hm, false);
  return {dist, xi};
}

double ManifoldProjector::dist_to_manifold(const Field& h) const {
  return dist_and_xi(h).first;
}

TubularCoords ManifoldProjector::project(const Field& h) const {
  if (h.boundary != Field::Boundary::ramp)
    throw std::invalid_argument("projection needs a ramp-boundary field");
  Vec ext = h.ext_values();
  double hm = ext.dot(fem_->mass_ext * ext);
  auto [xi, dist] = scan_newton(ext, hm, true);
  double r = residual(ext, xi);
  if (std::abs(r) > 1e-10)
    throw NoConvergence("projection Newton did not reach the residual tolerance");

  TubularCoords tc;
  tc.xi = xi;
  tc.dist = dist;
  tc.orth_residual = r;
  Field carr = carrier(xi);
  tc.v = Field(fem_->grid, Field::Boundary::zero, h.coeffs - carr.coeffs);
  return tc;
}

FermiGradient ManifoldProjector::fermi_gradient(const Field& h) const {
  Vec ext = h.ext_values();
  double hm = ext.dot(fem_->mass_ext * ext);
  auto [xi, dist] = scan_newton(ext, hm, true);
  (void)dist;
  double denom = residual_deriv(ext, xi);
  double tn = std::sqrt(tangent_norm_sq_);
  if (std::abs(denom) < 0.1 * tangent_norm_sq_)
    throw DenominatorNearZero("fermi gradient denominator below 0.1 ||dx m||^2");

  const GridSpec& g = fem_->grid;
  Vec load = load_vector_xfunc(*fem_, [&](double x) { return profile_->derivative(x - xi); });
  FermiGradient fg;
  fg.denominator = denom;
  fg.analytic = Vec::Zero(g.N);
  // implicit differentiation of the orthogonality relation: moving mass in the
  // +tangent direction shifts the interface left, hence the minus sign
  for (long i = 0; i < g.ext_count(); ++i) {
    long f = fem_->ext_to_free[i];
    if (f >= 0) fg.analytic[f] = -load[i] / denom;
  }
  fg.norm_bound =
      std::pow(2.0, g.d + 1) * std::pow(g.a, 0.5 * (g.d + 1)) * tn / std::abs(denom);
  return fg;
}

}  // namespace ac
