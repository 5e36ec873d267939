#include "ac/gaussian.hpp"

#include <cmath>

namespace ac {

namespace {

constexpr double kTwoPi = 6.283185307179586;

GaussianSpec finish(GaussianSpec spec, double affine_offset) {
  spec.factor = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  spec.factor->compute(spec.precision);
  if (spec.factor->info() != Eigen::Success)
    throw NoConvergence("precision factorization failed (non-SPD assembly?)");
  spec.log_det_precision = spec.factor->vectorD().array().log().sum();
  long N = spec.precision.rows();
  spec.log_norm = 0.5 * N * std::log(kTwoPi) - 0.5 * spec.log_det_precision + affine_offset;
  return spec;
}

}  // namespace

Vec GaussianSpec::factor_apply(const Vec& v) const {
  // precision = P^T L D L^T P; take F = D^{1/2} L^T P
  Vec w = factor->permutationP() * v;
  w = factor->matrixU().template triangularView<Eigen::UnitUpper>() * w;
  return factor->vectorD().array().sqrt().matrix().asDiagonal() * w;
}

GaussianSpec make_nu1(const FemMatrices& fem, double eps) {
  GaussianSpec s;
  s.kind = GaussianSpec::Kind::nu1;
  s.eps = eps;
  s.fem = &fem;
  s.precision = (1.0 / eps) * fem.stiffness;
  s.mean = fem.ramp_field.coeffs;
  s.boundary = Field::Boundary::ramp;
  return finish(std::move(s), -1.0 / (eps * fem.grid.LD));
}

GaussianSpec make_nu2(const FemMatrices& fem) {
  GaussianSpec s;
  s.kind = GaussianSpec::Kind::nu2;
  s.fem = &fem;
  s.precision = fem.stiffness;
  s.mean = fem.ramp_field.coeffs;
  s.boundary = Field::Boundary::ramp;
  return finish(std::move(s), -1.0 / fem.grid.LD);
}

GaussianSpec make_rho(const FemMatrices& fem, double eps, double kappa) {
  GaussianSpec s;
  s.kind = GaussianSpec::Kind::rho;
  s.eps = eps;
  s.kappa = kappa;
  s.fem = &fem;
  SpMat h1 = fem.stiffness + fem.mass;
  s.precision = (kappa / eps) * h1;
  s.mean = Vec::Zero(fem.grid.N);
  s.boundary = Field::Boundary::zero;
  return finish(std::move(s), 0.0);
}

Field exact_sample(const GaussianSpec& spec, Rng& rng) {
  // x = mean + Pinv L^{-T} D^{-1/2} z has covariance precision^{-1}
  Vec z = rng.normal_vec(spec.precision.rows());
  Vec u = spec.factor->vectorD().array().rsqrt().matrix().asDiagonal() * z;
  Vec w = spec.factor->matrixU().template triangularView<Eigen::UnitUpper>().solve(u);
  Vec x = spec.factor->permutationPinv() * w;
  return Field(spec.fem->grid, spec.boundary, spec.mean + x);
}

Ratio21 log_partition_ratio_21(const FemMatrices& fem, double eps) {
  GaussianSpec nu1 = make_nu1(fem, eps);
  GaussianSpec nu2 = make_nu2(fem);
  Ratio21 r;
  r.value = nu2.log_norm - nu1.log_norm;
  double N = static_cast<double>(fem.grid.N);
  r.closed_form = -0.5 * N * std::log(eps) + (1.0 / fem.grid.LD) * (1.0 / eps - 1.0);
  double scale = std::max({1.0, std::abs(r.value), std::abs(r.closed_form)});
  r.rel_err = std::abs(r.value - r.closed_form) / scale;
  r.pass = r.rel_err <= 1e-8;
  return r;
}

Ratio31 log_partition_ratio_31(const FemMatrices& fem, double eps, double kappa) {
  GaussianSpec nu1 = make_nu1(fem, eps);
  GaussianSpec rho = make_rho(fem, eps, kappa);
  Ratio31 r;
  r.value = rho.log_norm - nu1.log_norm;

  // certified Poincare constant: largest eigenvalue of Lambda^{-1} I over L^2
  Eigen::SimplicialLDLT<SpMat> lam(fem.stiffness);
  Vec v = Vec::Ones(fem.grid.N).normalized();
  double mu = 0, prev = -1;
  int it = 0;
  for (; it < 20000; ++it) {
    Vec w = lam.solve(fem.mass * v);
    mu = w.norm();  // growth factor of the power iteration
    v = w / mu;
    if (std::abs(mu - prev) <= 1e-12 * std::abs(mu)) break;
    prev = mu;
  }
  if (it >= 20000) throw NoConvergence("Poincare eigensolve stalled");
  double L = fem.grid.LD;
  r.poincare_C = mu / (L * L);
  double N = static_cast<double>(fem.grid.N);
  r.upper = 1.0 / (eps * L) - 0.5 * N * std::log(kappa);
  r.lower = r.upper - 0.5 * N * std::log1p(r.poincare_C * L * L);
  r.pass = (r.value <= r.upper + 1e-9) && (r.value >= r.lower - 1e-9);
  return r;
}

namespace {
ConcCheck finish_check(long hits, long n, double bound) {
  ConcCheck c;
  c.freq = static_cast<double>(hits) / n;
  c.bound = bound;
  c.mc_err = std::sqrt(std::max(c.freq * (1 - c.freq), 1.0 / n) / n);
  c.informative = bound < 1.0;
  c.pass = c.freq <= bound + 3.0 * c.mc_err;
  return c;
}
}  // namespace

ConcCheck concentration_sup_check(const FemMatrices& fem, double eps, double kappa,
                                  double delta, long n_samples, std::uint64_t seed) {
  GaussianSpec rho = make_rho(fem, eps, kappa);
  double lam_min = mass_eigen_floor(fem);
  double N = static_cast<double>(fem.grid.N);
  // E h_z^2 <= (eps/kappa) / lam_min(Lambda + I) <= eps / (kappa lam_min(I))
  double bound = N * std::exp(-delta * delta * kappa * lam_min / (2.0 * eps));
  Rng rng(seed);
  long hits = 0;
  for (long i = 0; i < n_samples; ++i) {
    Field h = exact_sample(rho, rng);
    if (h.coeffs.cwiseAbs().maxCoeff() >= delta) ++hits;
  }
  return finish_check(hits, n_samples, bound);
}

ConcCheck concentration_h1_check(const FemMatrices& fem, double eps, double kappa, double r,
                                 long n_samples, std::uint64_t seed) {
  GaussianSpec rho = make_rho(fem, eps, kappa);
  SpMat h1 = fem.stiffness + fem.mass;
  double N = static_cast<double>(fem.grid.N);
  double level = std::sqrt(eps * N / kappa) + r;
  double bound = std::exp(-kappa * r * r / (2.0 * eps));
  Rng rng(seed);
  long hits = 0;
  for (long i = 0; i < n_samples; ++i) {
    Field h = exact_sample(rho, rng);
    double h1norm = std::sqrt(h.coeffs.dot(h1 * h.coeffs));
    if (h1norm >= level) ++hits;
  }
  return finish_check(hits, n_samples, bound);
}

ConcCheck hilbert_concentration_check(const Vec& sigma_diag, double r, long n_samples,
                                      std::uint64_t seed) {
  double trace = sigma_diag.sum();
  double spike = sigma_diag.maxCoeff();
  double level = std::sqrt(trace) + r;
  double bound = std::exp(-r * r / (2.0 * spike));
  Rng rng(seed);
  long hits = 0;
  Vec sd = sigma_diag.array().sqrt();
  for (long i = 0; i < n_samples; ++i) {
    double s = 0;
    for (Eigen::Index k = 0; k < sd.size(); ++k) {
      double x = sd[k] * rng.normal();
      s += x * x;
    }
    if (std::sqrt(s) >= level) ++hits;
  }
  return finish_check(hits, n_samples, bound);
}

}  // namespace ac
