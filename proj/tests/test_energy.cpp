#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ac/energy.hpp"
#include "ac/fem.hpp"
#include "ac/profile.hpp"
#include "ac/tubular.hpp"

using namespace ac;

namespace {
const double kCstar = 2.0 * std::sqrt(2.0) / 3.0;

struct Lab {
  Potential F = make_quartic_potential();
  Profile m = solve_profile(F);
  GridSpec grid;
  FemMatrices fem;
  EnergyModel energy;
  ManifoldProjector proj;

  Lab(int d, double L, int n)
      : grid(build_grid(d, L, n)),
        fem(assemble(grid)),
        energy(fem, F, kCstar),
        proj(fem, m) {}
};
}  // namespace

TEST_CASE("ramp energy at d=0, L=2 matches the closed form") {
  Lab lab(0, 2.0, 8);
  EnergyReport r = lab.energy.report(lab.fem.ramp_field);
  double L = lab.grid.LD;
  // 1/2 int (1/L^2) + int F(x/L): the ramp is exactly piecewise linear
  CHECK(r.gradient_part == doctest::Approx(1.0 / L).epsilon(1e-12));
  CHECK(r.potential_part == doctest::Approx(L * 4.0 / 15.0).epsilon(1e-12));
  CHECK(r.total_raw == doctest::Approx(0.5 + 8.0 / 15.0).epsilon(1e-12));
}

TEST_CASE("interpolated cutoff profile energy vanishes at rate a^2") {
  Potential F = make_quartic_potential();
  Profile m = solve_profile(F);
  double eps = 1e-4, lambda1 = 0.15;
  std::vector<double> as, fes;
  for (int n : {4, 8, 16, 32}) {
    GridSpec g = build_grid(0, 8.0, n);
    FemMatrices fem = assemble(g);
    EnergyModel energy(fem, F, kCstar);
    Field h = cutoff_profile_field(m, 0.0, eps, lambda1, g);
    double fe = energy.report(h).free_energy;
    CHECK(fe > 0.0);
    as.push_back(g.a);
    fes.push_back(fe);
  }
  // log-log slope in a of the energy excess is ~2
  double s = (std::log(fes.front()) - std::log(fes.back())) /
             (std::log(as.front()) - std::log(as.back()));
  CHECK(s == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("single mesh-width jump slab has positive free energy") {
  Lab lab(0, 4.0, 4);
  Field h = sample_xfunc_field(lab.grid, Field::Boundary::ramp,
                               [](double x) { return x < 0 ? -1.0 : 1.0; });
  CHECK(lab.energy.report(h).free_energy > 0.0);
}

TEST_CASE("free energy nonnegative for ramp fields (exact quadrature)") {
  for (int d : {0, 1}) {
    Lab lab(d, 4.0, 4);
    Rng rng(61);
    for (int t = 0; t < 20; ++t) {
      Field h = lab.proj.carrier(rng.uniform(-1.0, 1.0));
      Field noise(lab.grid, Field::Boundary::zero, rng.normal_vec(lab.grid.N));
      h.coeffs += 0.2 * rng.uniform() * noise.coeffs;
      CHECK(lab.energy.report(h).free_energy >= -1e-9);
    }
  }
}

TEST_CASE("energy gradient matches central finite differences") {
  for (int d : {0, 1}) {
    Lab lab(d, 3.0, 4);
    Rng rng(67);
    for (int f = 0; f < 10; ++f) {
      Field h = lab.proj.carrier(0.0);
      Field noise(lab.grid, Field::Boundary::zero, rng.normal_vec(lab.grid.N));
      h.coeffs += 0.3 * noise.coeffs;
      Vec grad = lab.energy.energy_gradient(h);
      for (int t = 0; t < 4; ++t) {
        long z = rng.integer() % lab.grid.N;
        double step = 1e-6;
        Field hp = h, hm = h;
        hp.coeffs[z] += step;
        hm.coeffs[z] -= step;
        double fd = (lab.energy.report(hp).total_raw - lab.energy.report(hm).total_raw) /
                    (2 * step);
        CHECK(grad[z] == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("linear reaction term gradient is the mass action (linear-algebra oracle)") {
  Lab lab(1, 2.0, 4);
  Rng rng(71);
  Vec ext = rng.normal_vec(lab.grid.ext_count());
  Vec load = potential_load(lab.fem, ext, {0.0, 1.0});  // F' = u
  Vec oracle = lab.fem.mass_ext * ext;
  CHECK((load - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("energy decreases along the negative gradient") {
  Lab lab(0, 4.0, 4);
  Rng rng(73);
  for (int t = 0; t < 20; ++t) {
    Field h = lab.proj.carrier(0.0);
    Field noise(lab.grid, Field::Boundary::zero, rng.normal_vec(lab.grid.N));
    h.coeffs += 0.3 * noise.coeffs;
    double e0 = lab.energy.report(h).total_raw;
    Vec g = lab.energy.energy_gradient(h);
    h.coeffs -= 1e-3 * g;
    CHECK(lab.energy.report(h).total_raw < e0);
  }
}

TEST_CASE("translation near-invariance of the cutoff carrier energy") {
  Potential F = make_quartic_potential();
  Profile m = solve_profile(F);
  GridSpec g = build_grid(0, 8.0, 8);
  FemMatrices fem = assemble(g);
  EnergyModel energy(fem, F, kCstar);
  Field h0 = cutoff_profile_field(m, 0.0, 1e-4, 0.15, g);
  Field h1 = cutoff_profile_field(m, 1.0, 1e-4, 0.15, g);  // lattice-commensurate
  double f0 = energy.report(h0).free_energy;
  double f1 = energy.report(h1).free_energy;
  CHECK(std::abs(f1 - f0) <= 0.05 * g.a * g.a + 1e-6);
}

TEST_CASE("landscape upper bound: carrier alone and random admissible v") {
  for (int d : {0, 1}) {
    Potential F = make_quartic_potential();
    Profile m = solve_profile(F);
    GridSpec g = build_grid(d, 6.0, 4);
    FemMatrices fem = assemble(g);
    LandscapeUpperChecker checker(fem, F, m, 1e-4, 0.15, 4);

    Field v0(g, Field::Boundary::zero);
    UpperCheck c0 = checker.check(0.0, v0);
    CHECK(c0.lhs <= c0.slack);  // rhs = 0 at v = 0
    CHECK(c0.pass);

    Rng rng(79 + d);
    for (int t = 0; t < 20; ++t) {
      double xi = rng.uniform(-1.0, 1.0);
      Field v = checker.random_admissible(xi, 0.05 + 0.15 * rng.uniform(), rng);
      UpperCheck c = checker.check(xi, v);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("upper checker rejects inadmissible perturbations") {
  Potential F = make_quartic_potential();
  Profile m = solve_profile(F);
  GridSpec g = build_grid(0, 6.0, 4);
  FemMatrices fem = assemble(g);
  LandscapeUpperChecker checker(fem, F, m, 1e-4, 0.15, 2);
  Rng rng(83);
  Field big(g, Field::Boundary::zero, 10.0 * Vec::Ones(g.N));
  CHECK_THROWS_AS((void)checker.check(0.0, big), std::invalid_argument);
}

TEST_CASE("landscape lower probe finds a positive constant with a profile-like minimizer") {
  Lab lab(0, 6.0, 4);
  LowerProbeResult r = landscape_lower_probe(lab.energy, lab.proj, 0.2, 6, 12345);
  REQUIRE(r.feasible);
  CHECK(r.c0_estimate > 0.0);
  CHECK(lab.proj.dist_to_manifold(r.minimizer) >= 0.2 * (1 - 1e-6));

  // the minimizer keeps the interface structure: one sign change, ends near +-1
  const Vec& c = r.minimizer.coeffs;
  int sign_changes = 0;
  for (long i = 1; i < c.size(); ++i)
    if ((c[i] > 0) != (c[i - 1] > 0)) ++sign_changes;
  CHECK(sign_changes <= 3);
  CHECK(c[0] < -0.5);
  CHECK(c[c.size() - 1] > 0.5);

  // min property: no probed feasible field beats the estimate
  Rng rng(91);
  for (int t = 0; t < 50; ++t) {
    Field h = lab.proj.carrier(rng.uniform(-1.0, 1.0));
    Field noise(lab.grid, Field::Boundary::zero, rng.normal_vec(lab.grid.N));
    h.coeffs += noise.coeffs * (0.4 * rng.uniform());
    if (lab.proj.dist_to_manifold(h) >= 0.2)
      CHECK(lab.energy.report(h).free_energy >= r.min_energy - 1e-9);
  }
}

TEST_CASE("lower probe stability across seeds") {
  Lab lab(0, 6.0, 4);
  double lo = 1e300, hi = -1e300;
  for (std::uint64_t s : {1u, 2u, 3u, 4u, 5u}) {
    LowerProbeResult r = landscape_lower_probe(lab.energy, lab.proj, 0.2, 4, s);
    REQUIRE(r.feasible);
    lo = std::min(lo, r.c0_estimate);
    hi = std::max(hi, r.c0_estimate);
  }
  CHECK((hi - lo) / lo <= 0.2);
}

TEST_CASE("slice inequality: minimizer, t-perturbation, random fields") {
  Potential F = make_quartic_potential();
  Profile m = solve_profile(F);
  GridSpec g = build_grid(1, 3.0, 4);
  FemMatrices fem = assemble(g);
  SliceChecker checker(fem, m);
  ManifoldProjector proj(fem, m);

  Field h = proj.carrier(0.0);
  SliceCheck c1 = checker.check(h);
  CHECK(c1.pass);
  CHECK(c1.lhs <= c1.rhs + 1e-8);

  // pure-t perturbation: rhs bounded by the slice at the unperturbed t
  Field ht = h;
  std::vector<long> j(1);
  for (long k = -(g.floorLa - 1); k <= g.floorLa - 1; ++k)
    for (long t = 0; t <= g.n; ++t) {
      j[0] = t;
      ht.coeffs[g.free_index(k, j)] += 0.1 * std::sin(M_PI * t * g.a);
    }
  SliceCheck c2 = checker.check(ht);
  CHECK(c2.pass);

  Rng rng(97);
  for (int t = 0; t < 60; ++t) {
    Field hr = proj.carrier(rng.uniform(-1.0, 1.0));
    Field noise(g, Field::Boundary::zero, rng.normal_vec(g.N));
    hr.coeffs += noise.coeffs * (0.5 * rng.uniform());
    SliceCheck c = checker.check(hr);
    CHECK(c.pass);
  }
}
