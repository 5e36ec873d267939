#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ac/core.hpp"
#include "ac/energy.hpp"
#include "ac/fem.hpp"
#include "ac/potential.hpp"
#include "ac/tubular.hpp"

namespace ac {

struct ChainConfig {
  double eps = 0.5;
  double step = 0.1;
  enum class Precond { none, stiffness_shifted } precond = Precond::stiffness_shifted;
  long burn_in = 4000;
  long thin = 5;
  std::uint64_t seed = 1;
  long n_samples = 10000;
};

// Metropolis-adjusted Langevin targeting exp(-(1/eps)[ (1/2)int|grad h|^2 +
// beta int F(h) ]) w.r.t. Lebesgue measure on the free coefficients. The
// acceptance ratio includes the preconditioned proposal densities, so the
// chain is reversible for the target regardless of step size.
class MalaChain {
 public:
  MalaChain(const FemMatrices& fem, const Potential& potential, ChainConfig cfg,
            double beta = 1.0);

  // exact Ornstein-Uhlenbeck proposal for the pure Gaussian target (beta = 0):
  // the target is the proposal's own stationary law and log alpha vanishes
  void use_ou_proposal();

  void burn_in();  // step adaptation happens only here
  bool step();     // one MH transition; true if accepted

  const Vec& state() const { return h_; }
  void set_state(const Vec& h);
  Field state_field() const { return Field(fem_->grid, Field::Boundary::ramp, h_); }

  double potential_integral() const;  // int F(h) at the current state
  double last_log_alpha() const { return last_log_alpha_; }
  double acceptance_rate() const {
    return n_total_ ? static_cast<double>(n_accept_) / n_total_ : 0.0;
  }
  double step_size() const { return cfg_.step; }
  const ChainConfig& config() const { return cfg_; }

 private:
  void refresh();  // phi and gradient at h_
  Vec precond_solve(const Vec& v) const;
  Vec precond_noise();
  double precond_quad(const Vec& v) const;

  const FemMatrices* fem_;
  const Potential* potential_;
  ChainConfig cfg_;
  double beta_;
  bool ou_ = false;
  SpMat precond_mat_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> precond_factor_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> stiff_factor_;  // OU mode
  Rng rng_;
  Vec h_, grad_, ext_;
  double phi_ = 0, last_log_alpha_ = 0;
  long n_accept_ = 0, n_total_ = 0;
};

// Euler-Maruyama discretization of the Langevin dynamics in the lumped L^2
// metric; biased (no accept step), kept for dynamics illustration.
class UlaChain {
 public:
  UlaChain(const FemMatrices& fem, const Potential& potential, double eps, double step,
           std::uint64_t seed);
  void set_state(const Vec& h) { h_ = h; }
  const Vec& state() const { return h_; }
  Field state_field() const { return Field(fem_->grid, Field::Boundary::ramp, h_); }
  void step();                    // draws its own noise
  void step_with(const Vec& z);   // caller-supplied standard normal increment

 private:
  const FemMatrices* fem_;
  const Potential* potential_;
  double eps_, step_;
  Vec lumped_mass_;
  Rng rng_;
  Vec h_;
};

struct TailEstimate {
  double p_hat = 0, ci_low = 0, ci_high = 0;
  double eps_log_p = 0;  // eps log p_hat; from ci_high when no hits were seen
  enum class Method { direct, importance } method = Method::direct;
  bool empty_count = false;
  double ess = 0;             // importance only
  double tau_int = 0;         // integrated autocorrelation of dist (in steps)
  long hits = 0;
};

TailEstimate estimate_tail(const FemMatrices& fem, const Potential& potential,
                           const ManifoldProjector& projector, const ChainConfig& cfg,
                           double delta, bool allow_importance = true);

struct LogZReport {
  std::vector<double> beta, integrand, rhat;
  double eps_log_z = 0;
};

// Thermodynamic integration of log Z over exp(-(beta/eps) int F) d nu1;
// rung 0 uses exact Gaussian samples, the rest MALA (R-hat gate at 1.1).
double estimate_log_Z(const FemMatrices& fem, const Potential& potential, double eps,
                      int n_rungs, long samples_per_rung, std::uint64_t seed,
                      LogZReport* report = nullptr);

// integrated autocorrelation time (Geyer initial positive sequence)
double integrated_autocorrelation(const std::vector<double>& series);

}  // namespace ac
