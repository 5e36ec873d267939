#include "ac/sampler.hpp"

#include "ac/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace ac {

// ---- MALA --------------------------------------------------------------------

MalaChain::MalaChain(const FemMatrices& fem, const Potential& potential, ChainConfig cfg,
                     double beta)
    : fem_(&fem),
      potential_(&potential),
      cfg_(cfg),
      beta_(beta),
      rng_(cfg.seed),
      h_(fem.ramp_field.coeffs) {
  if (cfg_.step <= 0) throw std::invalid_argument("step must be positive");
  if (cfg_.precond == ChainConfig::Precond::stiffness_shifted) {
    precond_mat_ = fem.stiffness + fem.mass;
    precond_factor_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(precond_mat_);
    if (precond_factor_->info() != Eigen::Success)
      throw NoConvergence("preconditioner factorization failed");
  }
  refresh();
}

void MalaChain::use_ou_proposal() {
  if (beta_ != 0.0)
    throw std::invalid_argument("the exact OU proposal needs the Gaussian target (beta=0)");
  ou_ = true;
  stiff_factor_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(fem_->stiffness);
}

void MalaChain::set_state(const Vec& h) {
  h_ = h;
  refresh();
}

double MalaChain::potential_integral() const {
  return integrate_potential(*fem_, ext_, potential_->coeffs());
}

void MalaChain::refresh() {
  Field f(fem_->grid, Field::Boundary::ramp, h_);
  ext_ = f.ext_values();
  Vec se = fem_->stiff_ext * ext_;
  double u = 0.5 * ext_.dot(se);
  if (beta_ != 0.0) u += beta_ * integrate_potential(*fem_, ext_, potential_->coeffs());
  phi_ = u / cfg_.eps;
  grad_ = Vec::Zero(fem_->grid.N);
  Vec pl;
  if (beta_ != 0.0) pl = potential_load(*fem_, ext_, potential_->d1_coeffs());
  for (long i = 0; i < fem_->grid.ext_count(); ++i) {
    long fidx = fem_->ext_to_free[i];
    if (fidx >= 0) grad_[fidx] = (se[i] + (beta_ != 0.0 ? beta_ * pl[i] : 0.0)) / cfg_.eps;
  }
}

Vec MalaChain::precond_solve(const Vec& v) const {
  if (cfg_.precond == ChainConfig::Precond::none) return v;
  return precond_factor_->solve(v);
}

double MalaChain::precond_quad(const Vec& v) const {
  if (cfg_.precond == ChainConfig::Precond::none) return v.squaredNorm();
  return v.dot(precond_mat_ * v);
}

Vec MalaChain::precond_noise() {
  Vec z = rng_.normal_vec(h_.size());
  if (cfg_.precond == ChainConfig::Precond::none) return z;
  Vec u = precond_factor_->vectorD().array().rsqrt().matrix().asDiagonal() * z;
  Vec w = precond_factor_->matrixU().template triangularView<Eigen::UnitUpper>().solve(u);
  return precond_factor_->permutationPinv() * w;
}

bool MalaChain::step() {
  ++n_total_;
  if (!std::isfinite(grad_.sum())) throw NoConvergence("NaN in the drift gradient");

  if (ou_) {
    // exact OU transition for the Gaussian target exp(-(1/2 eps)(h-l)' S (h-l))
    const Vec& l = fem_->ramp_field.coeffs;
    double gamma = std::exp(-cfg_.step);
    double s2 = (1.0 - gamma * gamma) * cfg_.eps;
    Vec z = rng_.normal_vec(h_.size());
    Vec u = stiff_factor_->vectorD().array().rsqrt().matrix().asDiagonal() * z;
    Vec w = stiff_factor_->matrixU().template triangularView<Eigen::UnitUpper>().solve(u);
    Vec noise = std::sqrt(s2) * (stiff_factor_->permutationPinv() * w);
    Vec hp = l + gamma * (h_ - l) + noise;

    auto quadS = [&](const Vec& v) { return v.dot(fem_->stiffness * v); };
    Field fp(fem_->grid, Field::Boundary::ramp, hp);
    Vec extp = fp.ext_values();
    double phip = 0.5 * extp.dot(fem_->stiff_ext * extp) / cfg_.eps;
    double logq_fwd = -quadS(hp - l - gamma * (h_ - l)) / (2.0 * s2);
    double logq_bwd = -quadS(h_ - l - gamma * (hp - l)) / (2.0 * s2);
    last_log_alpha_ = phi_ - phip + logq_bwd - logq_fwd;
    if (std::log(rng_.uniform() + 1e-300) < last_log_alpha_) {
      h_ = hp;
      refresh();
      ++n_accept_;
      return true;
    }
    return false;
  }

  double tau = cfg_.step;
  Vec drift = precond_solve(grad_);
  Vec mean_fwd = h_ - tau * drift;
  Vec hp = mean_fwd + std::sqrt(2.0 * tau) * precond_noise();

  // evaluate the proposal state
  Field fp(fem_->grid, Field::Boundary::ramp, hp);
  Vec extp = fp.ext_values();
  Vec sep = fem_->stiff_ext * extp;
  double up = 0.5 * extp.dot(sep);
  if (beta_ != 0.0) up += beta_ * integrate_potential(*fem_, extp, potential_->coeffs());
  double phip = up / cfg_.eps;
  Vec gradp = Vec::Zero(h_.size());
  Vec plp;
  if (beta_ != 0.0) plp = potential_load(*fem_, extp, potential_->d1_coeffs());
  for (long i = 0; i < fem_->grid.ext_count(); ++i) {
    long fidx = fem_->ext_to_free[i];
    if (fidx >= 0) gradp[fidx] = (sep[i] + (beta_ != 0.0 ? beta_ * plp[i] : 0.0)) / cfg_.eps;
  }
  Vec mean_bwd = hp - tau * precond_solve(gradp);

  last_log_alpha_ = phi_ - phip +
                    (precond_quad(hp - mean_fwd) - precond_quad(h_ - mean_bwd)) / (4.0 * tau);
  if (std::log(rng_.uniform() + 1e-300) < last_log_alpha_) {
    h_ = hp;
    ext_ = extp;
    phi_ = phip;
    grad_ = gradp;
    ++n_accept_;
    return true;
  }
  return false;
}

void MalaChain::burn_in() {
  long window = 50, acc = 0;
  long lowstreak = 0;
  for (long i = 1; i <= cfg_.burn_in; ++i) {
    if (step()) ++acc;
    if (i % window == 0) {
      double rate = static_cast<double>(acc) / window;
      acc = 0;
      if (rate < 0.05) {
        cfg_.step *= 0.5;  // repeated low acceptance halves the step
        ++lowstreak;
      } else {
        lowstreak = 0;
        cfg_.step *= std::exp(0.4 * (rate - 0.574));
      }
      if (lowstreak > 40) throw NoConvergence("step collapsed during burn-in");
    }
  }
  n_accept_ = 0;
  n_total_ = 0;  // adaptation over; statistics restart
}

// ---- ULA ---------------------------------------------------------------------

UlaChain::UlaChain(const FemMatrices& fem, const Potential& potential, double eps,
                   double step, std::uint64_t seed)
    : fem_(&fem),
      potential_(&potential),
      eps_(eps),
      step_(step),
      rng_(seed),
      h_(fem.ramp_field.coeffs) {
  // lumped mass: int phi_z over the domain = row sums of the extended mass
  Vec ones = Vec::Ones(fem.grid.ext_count());
  Vec rows = fem.mass_ext * ones;
  lumped_mass_ = Vec::Zero(fem.grid.N);
  for (long i = 0; i < fem.grid.ext_count(); ++i) {
    long f = fem.ext_to_free[i];
    if (f >= 0) lumped_mass_[f] = rows[i];
  }
}

void UlaChain::step_with(const Vec& z) {
  Field f(fem_->grid, Field::Boundary::ramp, h_);
  Vec ext = f.ext_values();
  Vec se = fem_->stiff_ext * ext;
  Vec pl = potential_load(*fem_, ext, potential_->d1_coeffs());
  for (long i = 0; i < fem_->grid.ext_count(); ++i) {
    long fidx = fem_->ext_to_free[i];
    if (fidx >= 0) {
      double g = se[i] + pl[i];
      h_[fidx] += -step_ * g / lumped_mass_[fidx] +
                  std::sqrt(2.0 * eps_ * step_ / lumped_mass_[fidx]) * z[fidx];
    }
  }
  if (h_.cwiseAbs().maxCoeff() > 1e3) throw NoConvergence("ULA blow-up: ||h||_inf > 1e3");
}

void UlaChain::step() { step_with(rng_.normal_vec(h_.size())); }

// ---- tail probabilities --------------------------------------------------------

double integrated_autocorrelation(const std::vector<double>& series) {
  long n = static_cast<long>(series.size());
  if (n < 8) return 1.0;
  double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double var = 0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= n;
  if (var == 0) return 1.0;
  double tau = 1.0;
  for (long lag = 1; lag < n / 4; ++lag) {
    double c = 0;
    for (long i = 0; i + lag < n; ++i) c += (series[i] - mean) * (series[i + lag] - mean);
    c /= (n - lag) * var;
    if (c <= 0.0) break;  // initial positive sequence truncation
    tau += 2.0 * c;
  }
  return tau;
}

namespace {

struct BatchCI {
  double se = 0;
};

BatchCI batch_se(const std::vector<double>& indicator, int nbatch) {
  long n = static_cast<long>(indicator.size());
  nbatch = std::min<long>(nbatch, std::max<long>(2, n / 4));
  long bs = n / nbatch;
  std::vector<double> means;
  for (int b = 0; b < nbatch; ++b) {
    double s = 0;
    for (long i = b * bs; i < (b + 1) * bs; ++i) s += indicator[i];
    means.push_back(s / bs);
  }
  double m = std::accumulate(means.begin(), means.end(), 0.0) / nbatch;
  double v = 0;
  for (double x : means) v += (x - m) * (x - m);
  v /= (nbatch - 1);
  BatchCI out;
  out.se = std::sqrt(v / nbatch);
  return out;
}

}  // namespace

TailEstimate estimate_tail(const FemMatrices& fem, const Potential& potential,
                           const ManifoldProjector& projector, const ChainConfig& cfg,
                           double delta, bool allow_importance) {
  MalaChain chain(fem, potential, cfg);
  chain.burn_in();

  // equilibration on the observable that drives the theorem: extend burn-in to
  // 10x the integrated autocorrelation time of dist(h, M)
  std::vector<double> pilot;
  long pilot_len = std::max<long>(600, 20 * cfg.thin);
  for (long i = 0; i < pilot_len; ++i) {
    chain.step();
    pilot.push_back(projector.dist_to_manifold(chain.state_field()));
  }
  double tau = integrated_autocorrelation(pilot);
  long extra = static_cast<long>(10.0 * tau);
  for (long i = 0; i < extra; ++i) chain.step();

  std::vector<double> dists, indicator;
  dists.reserve(cfg.n_samples);
  for (long s = 0; s < cfg.n_samples; ++s) {
    for (long t = 0; t < cfg.thin; ++t) chain.step();
    double d = projector.dist_to_manifold(chain.state_field());
    dists.push_back(d);
    indicator.push_back(d > delta ? 1.0 : 0.0);
  }
  if (chain.acceptance_rate() < 0.2 || chain.acceptance_rate() > 0.8)
    std::cerr << "[mala] acceptance rate " << chain.acceptance_rate()
              << " outside [0.2, 0.8] after adaptation\n";

  TailEstimate est;
  est.tau_int = tau;
  est.hits = static_cast<long>(std::accumulate(indicator.begin(), indicator.end(), 0.0));
  est.p_hat = static_cast<double>(est.hits) / cfg.n_samples;
  double se = batch_se(indicator, 32).se;
  est.ci_low = std::max(0.0, est.p_hat - 1.96 * se);
  est.ci_high = std::min(1.0, est.p_hat + 1.96 * se);

  double tau_thin = std::max(1.0, tau / cfg.thin);
  double n_eff = cfg.n_samples / tau_thin;
  if (est.hits == 0) {
    est.empty_count = true;
    est.ci_high = std::min(1.0, 3.0 / std::max(1.0, n_eff));  // rule of three
    est.eps_log_p = cfg.eps * std::log(est.ci_high);
  } else {
    est.eps_log_p = cfg.eps * std::log(est.p_hat);
  }
  est.method = TailEstimate::Method::direct;

  if (est.hits >= 10 || !allow_importance) return est;

  // anchored-ratio importance sampling: the unknown normalization cancels only
  // in ratios, so target mu(A)/mu(A_ref) against a moderate reference event
  // and anchor with the direct estimate of the reference.
  std::vector<double> sorted = dists;
  std::sort(sorted.begin(), sorted.end());
  double delta_ref = sorted[static_cast<std::size_t>(0.6 * (sorted.size() - 1))];
  double p_ref = 0;
  for (double d : dists) p_ref += (d > delta_ref);
  p_ref /= dists.size();
  if (p_ref <= 0) return est;

  const GridSpec& g = fem.grid;
  double kappa_p = 1.0, eps_infl = 2.0 * cfg.eps;
  GaussianSpec prop = make_rho(fem, eps_infl, kappa_p);
  std::vector<double> centers;
  for (double xi = -std::max(0.5, g.LD - 1.5); xi <= std::max(0.5, g.LD - 1.5) + 1e-12;
       xi += g.a)
    centers.push_back(xi);
  std::vector<Vec> carrier_coeffs;
  for (double xi : centers) carrier_coeffs.push_back(projector.carrier(xi).coeffs);

  double half_logdet = 0.5 * prop.log_det_precision;
  double logK = std::log(static_cast<double>(centers.size()));
  auto logq = [&](const Vec& h) {
    double best = -1e300;
    std::vector<double> terms(centers.size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      Vec d = h - carrier_coeffs[k];
      terms[k] = -0.5 * d.dot(prop.precision * d);
      best = std::max(best, terms[k]);
    }
    double s = 0;
    for (double t : terms) s += std::exp(t - best);
    // the (N/2) log 2pi constant cancels in weights against nothing; keep it
    return best + std::log(s) - logK + half_logdet -
           0.5 * g.N * std::log(2.0 * M_PI);
  };

  Rng rng(split_seed(cfg.seed, 9001));
  EnergyModel energy(fem, potential, 0.0);
  long M = cfg.n_samples;
  std::vector<double> logw(M);
  std::vector<double> dist_is(M);
  for (long i = 0; i < M; ++i) {
    std::size_t k = rng.integer() % centers.size();
    Field fluct = exact_sample(prop, rng);
    Vec h = carrier_coeffs[k] + fluct.coeffs;
    Field hf(g, Field::Boundary::ramp, h);
    dist_is[i] = projector.dist_to_manifold(hf);
    logw[i] = -energy.total_raw_ext(hf.ext_values()) / cfg.eps - logq(h);
  }
  double wmax = *std::max_element(logw.begin(), logw.end());
  double sw = 0, sw2 = 0, swA = 0, swRef = 0;
  for (long i = 0; i < M; ++i) {
    double w = std::exp(logw[i] - wmax);
    sw += w;
    sw2 += w * w;
    if (dist_is[i] > delta) swA += w;
    if (dist_is[i] > delta_ref) swRef += w;
  }
  double ess = sw * sw / std::max(sw2, 1e-300);
  if (ess < 50 || swRef <= 0)
    throw DegenerateWeights("importance sampling effective size below 50");
  if (swA <= 0) return est;  // even the proposal saw nothing; keep the direct bound
  est.method = TailEstimate::Method::importance;
  est.ess = ess;
  est.p_hat = (swA / swRef) * p_ref;
  est.empty_count = false;
  // crude CI: scale the anchored ratio by batch variability
  std::vector<double> ratios;
  int nb = 16;
  long bs = M / nb;
  for (int b = 0; b < nb; ++b) {
    double a = 0, r = 0;
    for (long i = b * bs; i < (b + 1) * bs; ++i) {
      double w = std::exp(logw[i] - wmax);
      if (dist_is[i] > delta) a += w;
      if (dist_is[i] > delta_ref) r += w;
    }
    if (r > 0) ratios.push_back(a / r * p_ref);
  }
  if (ratios.size() >= 2) {
    double m = std::accumulate(ratios.begin(), ratios.end(), 0.0) / ratios.size();
    double v = 0;
    for (double x : ratios) v += (x - m) * (x - m);
    v /= (ratios.size() - 1);
    double se_r = std::sqrt(v / ratios.size());
    est.ci_low = std::max(0.0, est.p_hat - 1.96 * se_r);
    est.ci_high = std::min(1.0, est.p_hat + 1.96 * se_r);
  }
  est.eps_log_p = est.p_hat > 0 ? cfg.eps * std::log(est.p_hat)
                                : cfg.eps * std::log(std::max(est.ci_high, 1e-300));
  return est;
}

// ---- thermodynamic integration -------------------------------------------------

namespace {
double split_rhat(const std::vector<std::vector<double>>& chains) {
  // split each chain in half; R-hat over the segments
  std::vector<std::vector<double>> segs;
  for (const auto& c : chains) {
    long half = static_cast<long>(c.size()) / 2;
    segs.emplace_back(c.begin(), c.begin() + half);
    segs.emplace_back(c.begin() + half, c.end());
  }
  long m = static_cast<long>(segs.size()), n = static_cast<long>(segs[0].size());
  std::vector<double> means(m);
  double grand = 0;
  for (long j = 0; j < m; ++j) {
    means[j] = std::accumulate(segs[j].begin(), segs[j].end(), 0.0) / n;
    grand += means[j];
  }
  grand /= m;
  double B = 0, W = 0;
  for (long j = 0; j < m; ++j) {
    B += (means[j] - grand) * (means[j] - grand);
    double v = 0;
    for (double x : segs[j]) v += (x - means[j]) * (x - means[j]);
    W += v / (n - 1);
  }
  B = B * n / (m - 1);
  W /= m;
  if (W <= 1e-300) return 1.0;
  double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}
}  // namespace

double estimate_log_Z(const FemMatrices& fem, const Potential& potential, double eps,
                      int n_rungs, long samples_per_rung, std::uint64_t seed,
                      LogZReport* report) {
  if (n_rungs < 8) throw std::invalid_argument("estimate_log_Z needs at least 8 rungs");
  std::vector<double> betas(n_rungs), integrand(n_rungs), rhats(n_rungs, 1.0);
  for (int j = 0; j < n_rungs; ++j) betas[j] = static_cast<double>(j) / (n_rungs - 1);

  // rung 0 is the exact Gaussian nu1
  {
    GaussianSpec nu1 = make_nu1(fem, eps);
    Rng rng(split_seed(seed, 0));
    double acc = 0;
    for (long i = 0; i < samples_per_rung; ++i) {
      Field h = exact_sample(nu1, rng);
      acc += integrate_potential(fem, h.ext_values(), potential.coeffs());
    }
    integrand[0] = acc / samples_per_rung / eps;
  }

  for (int j = 1; j < n_rungs; ++j) {
    std::vector<std::vector<double>> chains;
    double acc = 0;
    long count = 0;
    for (int c = 0; c < 2; ++c) {
      ChainConfig cfg;
      cfg.eps = eps;
      cfg.seed = split_seed(seed, 100 + 2 * j + c);
      cfg.burn_in = 2000;
      cfg.thin = 2;
      MalaChain chain(fem, potential, cfg, betas[j]);
      chain.burn_in();
      std::vector<double> series;
      for (long s = 0; s < samples_per_rung / 2; ++s) {
        for (long t = 0; t < cfg.thin; ++t) chain.step();
        double v = chain.potential_integral() / eps;
        series.push_back(v);
        acc += v;
        ++count;
      }
      chains.push_back(std::move(series));
    }
    rhats[j] = split_rhat(chains);
    if (rhats[j] > 1.1) throw NoConvergence("thermodynamic rung failed the R-hat gate");
    integrand[j] = acc / count;
  }

  double logz = 0;
  for (int j = 0; j + 1 < n_rungs; ++j)
    logz -= 0.5 * (integrand[j] + integrand[j + 1]) * (betas[j + 1] - betas[j]);
  if (report) {
    report->beta = betas;
    report->integrand = integrand;
    report->rhat = rhats;
    report->eps_log_z = eps * logz;
  }
  return eps * logz;
}

}  // namespace ac
