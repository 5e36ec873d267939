// aclab: lattice Allen-Cahn Gibbs-measure laboratory command line
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "ac/energy.hpp"
#include "ac/experiments.hpp"
#include "ac/fem.hpp"
#include "ac/gaussian.hpp"
#include "ac/potential.hpp"
#include "ac/profile.hpp"
#include "ac/rates.hpp"
#include "ac/sampler.hpp"
#include "ac/tubular.hpp"

using namespace ac;
using nlohmann::json;

namespace {

Potential load_potential(const std::string& spec) {
  if (spec == "quartic") return make_quartic_potential();
  std::ifstream in(spec);
  if (!in) throw std::runtime_error("cannot open potential file: " + spec);
  json j = json::parse(in);
  return Potential::custom(j.at("coeffs").get<std::vector<double>>());
}

Field load_field(const std::string& path, GridSpec& grid_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field file: " + path);
  json j = json::parse(in);
  grid_out = build_grid(j.at("d"), j.at("L"), j.at("n"));
  Field f(grid_out, j.at("boundary") == "zero" ? Field::Boundary::zero
                                               : Field::Boundary::ramp);
  auto coeffs = j.at("coeffs").get<std::vector<double>>();
  if (static_cast<long>(coeffs.size()) != grid_out.N)
    throw std::runtime_error("coefficient count does not match the grid");
  for (long i = 0; i < grid_out.N; ++i) f.coeffs[i] = coeffs[i];
  return f;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lattice Allen-Cahn Gibbs measure laboratory"};
  app.require_subcommand(1);

  // ---- profile -------------------------------------------------------------
  auto* profile_cmd = app.add_subcommand("profile", "transition profile table");
  std::string prof_pot = "quartic", prof_out = "-";
  double prof_xmax = 10.0;
  int prof_samples = 200;
  profile_cmd->add_option("--potential", prof_pot, "quartic or a JSON coefficient file");
  profile_cmd->add_option("--xmax", prof_xmax);
  profile_cmd->add_option("--samples", prof_samples);
  profile_cmd->add_option("--out", prof_out, "csv path or -");
  profile_cmd->callback([&] {
    Potential F = load_potential(prof_pot);
    Profile m = solve_profile(F);
    std::ostringstream out;
    out.precision(17);
    out << "x,m,m',m''\n";
    for (int i = 0; i <= prof_samples; ++i) {
      double x = -prof_xmax + 2.0 * prof_xmax * i / prof_samples;
      out << x << "," << m.value(x) << "," << m.derivative(x) << ","
          << m.second_derivative(x) << "\n";
    }
    write_text(prof_out, out.str());
  });

  // ---- mesh ------------------------------------------------------------------
  auto* mesh_cmd = app.add_subcommand("mesh", "grid and P1 matrices");
  int mesh_d = 1, mesh_n = 4;
  double mesh_L = 2.0;
  std::string mesh_dump;
  mesh_cmd->add_option("--d", mesh_d);
  mesh_cmd->add_option("--L", mesh_L);
  mesh_cmd->add_option("--n", mesh_n);
  mesh_cmd->add_option("--dump-matrices", mesh_dump, "Matrix Market prefix");
  mesh_cmd->callback([&] {
    GridSpec g = build_grid(mesh_d, mesh_L, mesh_n);
    FemMatrices fem = assemble(g);
    std::cout << "d=" << g.d << " L=" << g.L << " LD=" << g.LD << " a=" << g.a
              << " N=" << g.N << " ramp_energy=" << fem.ramp_energy << "\n";
    if (!mesh_dump.empty()) {
      write_matrix_market(fem.stiffness, mesh_dump + ".stiffness.mtx");
      write_matrix_market(fem.mass, mesh_dump + ".mass.mtx");
      std::cout << "wrote " << mesh_dump << ".{stiffness,mass}.mtx\n";
    }
  });

  // ---- energy ----------------------------------------------------------------
  auto* energy_cmd = app.add_subcommand("energy", "free energy of a field");
  std::string en_field, en_pot = "quartic", en_report = "-";
  energy_cmd->add_option("--field", en_field)->required();
  energy_cmd->add_option("--potential", en_pot);
  energy_cmd->add_option("--report", en_report);
  energy_cmd->callback([&] {
    GridSpec g;
    Field h = load_field(en_field, g);
    Potential F = load_potential(en_pot);
    FemMatrices fem = assemble(g);
    EnergyModel energy(fem, F, surface_tension(F));
    EnergyReport r = energy.report(h);
    json out{{"gradient_part", r.gradient_part},
             {"potential_part", r.potential_part},
             {"total_raw", r.total_raw},
             {"free_energy", r.free_energy}};
    write_text(en_report, out.dump(2) + "\n");
  });

  // ---- landscape -------------------------------------------------------------
  auto* land_cmd = app.add_subcommand("landscape", "lower landscape probe");
  double land_delta = 0.2, land_L = 6.0;
  int land_trials = 6, land_d = 0, land_n = 4;
  std::uint64_t land_seed = 1;
  std::string land_out = "-";
  land_cmd->add_option("--delta", land_delta);
  land_cmd->add_option("--trials", land_trials);
  land_cmd->add_option("--seed", land_seed);
  land_cmd->add_option("--d", land_d);
  land_cmd->add_option("--L", land_L);
  land_cmd->add_option("--n", land_n);
  land_cmd->add_option("--out", land_out);
  land_cmd->callback([&] {
    Potential F = make_quartic_potential();
    Profile m = solve_profile(F);
    GridSpec g = build_grid(land_d, land_L, land_n);
    FemMatrices fem = assemble(g);
    EnergyModel energy(fem, F, surface_tension(F));
    ManifoldProjector proj(fem, m);
    LowerProbeResult r = landscape_lower_probe(energy, proj, land_delta, land_trials,
                                               land_seed);
    std::ostringstream out;
    out.precision(17);
    out << "delta,c0_estimate,min_energy\n";
    out << land_delta << "," << r.c0_estimate << "," << r.min_energy << "\n";
    write_text(land_out, out.str());
  });

  // ---- project ---------------------------------------------------------------
  auto* proj_cmd = app.add_subcommand("project", "tubular coordinates of a field");
  std::string proj_field, proj_out = "-";
  proj_cmd->add_option("--field", proj_field)->required();
  proj_cmd->add_option("--out", proj_out);
  proj_cmd->callback([&] {
    GridSpec g;
    Field h = load_field(proj_field, g);
    Potential F = make_quartic_potential();
    Profile m = solve_profile(F);
    FemMatrices fem = assemble(g);
    ManifoldProjector proj(fem, m);
    TubularCoords tc = proj.project(h);
    json out{{"xi", tc.xi}, {"dist", tc.dist}, {"orth_residual", tc.orth_residual}};
    write_text(proj_out, out.dump(2) + "\n");
  });

  // ---- gaussian --------------------------------------------------------------
  auto* gauss_cmd = app.add_subcommand("gaussian", "Gaussian reference measures");
  std::string gs_measure = "rho", gs_check, gs_out = "-";
  double gs_eps = 0.1, gs_kappa = 1.0, gs_level = 0.0;
  long gs_samples = 20000;
  int gs_d = 1, gs_n = 4;
  double gs_L = 2.0;
  std::uint64_t gs_seed = 1;
  gauss_cmd->add_option("--measure", gs_measure, "nu1|nu2|rho");
  gauss_cmd->add_option("--eps", gs_eps);
  gauss_cmd->add_option("--kappa", gs_kappa);
  gauss_cmd->add_option("--samples", gs_samples);
  gauss_cmd->add_option("--check", gs_check, "sup|h1|ratio21|ratio31");
  gauss_cmd->add_option("--level", gs_level, "delta (sup) or r (h1); 0 = auto");
  gauss_cmd->add_option("--d", gs_d);
  gauss_cmd->add_option("--L", gs_L);
  gauss_cmd->add_option("--n", gs_n);
  gauss_cmd->add_option("--seed", gs_seed);
  gauss_cmd->add_option("--out", gs_out);
  gauss_cmd->callback([&] {
    GridSpec g = build_grid(gs_d, gs_L, gs_n);
    FemMatrices fem = assemble(g);
    std::ostringstream out;
    out.precision(17);
    if (gs_check == "ratio21") {
      Ratio21 r = log_partition_ratio_21(fem, gs_eps);
      out << "check,value,closed_form,rel_err,pass\n";
      out << "ratio21," << r.value << "," << r.closed_form << "," << r.rel_err << ","
          << r.pass << "\n";
    } else if (gs_check == "ratio31") {
      Ratio31 r = log_partition_ratio_31(fem, gs_eps, gs_kappa);
      out << "check,value,lower,upper,poincare_C,pass\n";
      out << "ratio31," << r.value << "," << r.lower << "," << r.upper << ","
          << r.poincare_C << "," << r.pass << "\n";
    } else if (gs_check == "sup") {
      double lam_min = mass_eigen_floor(fem);
      double delta = gs_level > 0
                         ? gs_level
                         : std::sqrt(2.0 * gs_eps * std::log(g.N / 0.05) /
                                     (gs_kappa * lam_min));
      ConcCheck c = concentration_sup_check(fem, gs_eps, gs_kappa, delta, gs_samples,
                                            gs_seed);
      out << "check,level,freq,bound,pass\n";
      out << "sup," << delta << "," << c.freq << "," << c.bound << "," << c.pass << "\n";
    } else if (gs_check == "h1") {
      double r = gs_level > 0 ? gs_level : 1.2 * std::sqrt(gs_eps / gs_kappa);
      ConcCheck c = concentration_h1_check(fem, gs_eps, gs_kappa, r, gs_samples, gs_seed);
      out << "check,level,freq,bound,pass\n";
      out << "h1," << r << "," << c.freq << "," << c.bound << "," << c.pass << "\n";
    } else {
      // no check: emit samples of a linear functional for quick inspection
      GaussianSpec spec = gs_measure == "nu1"   ? make_nu1(fem, gs_eps)
                          : gs_measure == "nu2" ? make_nu2(fem)
                                                : make_rho(fem, gs_eps, gs_kappa);
      Rng rng(gs_seed);
      out << "sample,center_value\n";
      for (long i = 0; i < std::min<long>(gs_samples, 1000); ++i) {
        Field h = exact_sample(spec, rng);
        out << i << "," << h.coeffs[g.N / 2] << "\n";
      }
    }
    write_text(gs_out, out.str());
  });

  // ---- mcmc ------------------------------------------------------------------
  auto* mcmc_cmd = app.add_subcommand("mcmc", "sample the Gibbs measure");
  double mc_eps = 0.3, mc_lambda = 0.3, mc_alpha = 0.2, mc_delta = 0.3;
  int mc_d = 1;
  long mc_samples = 2000;
  std::uint64_t mc_seed = 1;
  std::string mc_method = "mala", mc_out = "-";
  mcmc_cmd->add_option("--eps", mc_eps);
  mcmc_cmd->add_option("--d", mc_d);
  mcmc_cmd->add_option("--lambda", mc_lambda);
  mcmc_cmd->add_option("--alpha", mc_alpha);
  mcmc_cmd->add_option("--delta", mc_delta);
  mcmc_cmd->add_option("--samples", mc_samples);
  mcmc_cmd->add_option("--seed", mc_seed);
  mcmc_cmd->add_option("--method", mc_method, "mala|ula");
  mcmc_cmd->add_option("--out", mc_out);
  mcmc_cmd->callback([&] {
    ExperimentSchedule s;
    s.d = mc_d;
    s.lambda = mc_lambda;
    s.alpha = mc_alpha;
    s.delta = mc_delta;
    s.eps_list = {mc_eps};
    s = validate_schedule(s);
    const auto& r = s.rows[0];
    GridSpec g = build_grid(s.d, r.L, r.n);
    FemMatrices fem = assemble(g);
    Potential F = make_quartic_potential();
    Profile m = solve_profile(F);
    ManifoldProjector proj(fem, m);
    EnergyModel energy(fem, F, surface_tension(F));
    std::ostringstream out;
    out.precision(17);
    out << "iter,dist,energy,accept\n";
    if (mc_method == "ula") {
      UlaChain chain(fem, F, mc_eps, 0.005, mc_seed);
      for (long i = 0; i < mc_samples; ++i) {
        chain.step();
        out << i << "," << proj.dist_to_manifold(chain.state_field()) << ","
            << energy.total_raw_ext(chain.state_field().ext_values()) << ",1\n";
      }
    } else {
      ChainConfig cfg;
      cfg.eps = mc_eps;
      cfg.seed = mc_seed;
      MalaChain chain(fem, F, cfg);
      chain.burn_in();
      for (long i = 0; i < mc_samples; ++i) {
        bool acc = chain.step();
        out << i << "," << proj.dist_to_manifold(chain.state_field()) << ","
            << energy.total_raw_ext(chain.state_field().ext_values()) << "," << acc
            << "\n";
      }
    }
    write_text(mc_out, out.str());
  });

  // ---- logz ------------------------------------------------------------------
  auto* logz_cmd = app.add_subcommand("logz", "thermodynamic integration of log Z");
  int lz_rungs = 12, lz_d = 0, lz_n = 4;
  long lz_spr = 4000;
  double lz_eps = 0.3, lz_L = 2.0;
  std::uint64_t lz_seed = 1;
  logz_cmd->add_option("--rungs", lz_rungs);
  logz_cmd->add_option("--samples-per-rung", lz_spr);
  logz_cmd->add_option("--eps", lz_eps);
  logz_cmd->add_option("--d", lz_d);
  logz_cmd->add_option("--L", lz_L);
  logz_cmd->add_option("--n", lz_n);
  logz_cmd->add_option("--seed", lz_seed);
  logz_cmd->callback([&] {
    GridSpec g = build_grid(lz_d, lz_L, lz_n);
    FemMatrices fem = assemble(g);
    Potential F = make_quartic_potential();
    LogZReport rep;
    double v = estimate_log_Z(fem, F, lz_eps, lz_rungs, lz_spr, lz_seed, &rep);
    std::cout << "eps_log_z=" << v << "  floor(-C*)=" << -surface_tension(F) << "\n";
    for (std::size_t j = 0; j < rep.beta.size(); ++j)
      std::cout << "  beta=" << rep.beta[j] << " integrand=" << rep.integrand[j]
                << " rhat=" << rep.rhat[j] << "\n";
  });

  // ---- experiment ------------------------------------------------------------
  auto* exp_cmd = app.add_subcommand("experiment", "schedule-driven experiments");
  std::string exp_config, exp_out = "report.json", exp_csv, exp_kind = "theorem";
  exp_cmd->add_option("--config", exp_config, "JSON schedule file")->required();
  exp_cmd->add_option("--out", exp_out);
  exp_cmd->add_option("--csv", exp_csv);
  exp_cmd->add_option("--kind", exp_kind, "theorem|battery");
  exp_cmd->callback([&] {
    std::ifstream in(exp_config);
    if (!in) throw std::runtime_error("cannot open config: " + exp_config);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentSchedule s = schedule_from_json(ss.str());
    if (exp_kind == "battery") {
      BatteryReport r = run_verification_battery(s);
      write_text(exp_out, battery_report_json(r, s));
      if (!exp_csv.empty()) write_text(exp_csv, battery_report_csv(r));
      std::cout << (r.overall_pass ? "PASS" : "FAIL") << "\n";
      if (!r.overall_pass) throw CLI::RuntimeError(1);
    } else {
      TheoremReport r = run_main_theorem(s);
      write_text(exp_out, theorem_report_json(r, s));
      if (!exp_csv.empty()) write_text(exp_csv, theorem_report_csv(r));
      std::cout << (r.overall_pass ? "PASS" : "FAIL") << "\n";
      if (!r.overall_pass) throw CLI::RuntimeError(1);
    }
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
