#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ac/core.hpp"
#include "ac/fem.hpp"
#include "ac/grid.hpp"

using namespace ac;

TEST_CASE("node count formula") {
  CHECK(build_grid(0, 2.0, 2).N == 7);
  CHECK(build_grid(1, 1.0, 2).N == 9);
  CHECK(build_grid(1, 2.0, 4).N == 75);
  CHECK_THROWS_AS(build_grid(0, 0.4, 2), std::invalid_argument);  // L < 2a
}

TEST_CASE("Kuhn subdivision counts and volumes") {
  CHECK(subdivide_cube(1).size() == 1);
  CHECK(subdivide_cube(2).size() == 2);
  CHECK(subdivide_cube(3).size() == 6);
  for (int d = 0; d <= 2; ++d) {
    GridSpec g = build_grid(d, 2.0, 2);
    FemMatrices fem = assemble(g);
    double vol = 0;
    for (const auto& el : fem.elements) vol += el.vol;
    CHECK(vol == doctest::Approx(std::pow(g.a, d + 1)).epsilon(1e-12));
  }
}

TEST_CASE("interpolation reproduces nodes, boundary and edge midpoints") {
  GridSpec g = build_grid(1, 2.0, 4);
  Rng rng(7);
  Field h(g, Field::Boundary::ramp, rng.normal_vec(g.N));

  std::vector<long> j = {2};
  double x = 3 * g.a, y = 2 * g.a;
  double node_val = h.coeffs[g.free_index(3, j)];
  CHECK(interpolate(h, std::vector<double>{x, y}) == doctest::Approx(node_val).epsilon(1e-13));

  CHECK(interpolate(h, std::vector<double>{g.L, 0.3}) == doctest::Approx(1.0));
  CHECK(interpolate(h, std::vector<double>{-g.L, 0.9}) == doctest::Approx(-1.0));
  CHECK(interpolate(h, std::vector<double>{(g.floorLa + 1) * g.a, 0.5}) == doctest::Approx(1.0));

  // midpoint of a lattice edge between values 0 and 1
  Field e(g, Field::Boundary::zero);
  e.coeffs[g.free_index(0, j)] = 0.0;
  e.coeffs[g.free_index(1, j)] = 1.0;
  CHECK(interpolate(e, std::vector<double>{0.5 * g.a, y}) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("partition of unity") {
  GridSpec g = build_grid(1, 2.0, 4);
  FemMatrices fem = assemble(g);
  Vec ones = Vec::Ones(g.ext_count());
  // hat functions sum to one: nodal ones integrate to the domain volume
  CHECK(integrate_field_xfunc(fem, ones, [](double) { return 1.0; }) ==
        doctest::Approx(2.0 * g.LD).epsilon(1e-12));
  CHECK(ones.dot(fem.mass_ext * ones) == doctest::Approx(2.0 * g.LD).epsilon(1e-12));
  // interior interpolation of the all-ones nodal vector is exactly 1
  Field f(g, Field::Boundary::zero, Vec::Ones(g.N));
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    double x = rng.uniform(-g.LD + g.a, g.LD - g.a);
    double y = rng.uniform(0.0, 1.0);
    CHECK(interpolate(f, std::vector<double>{x, y}) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("1D stiffness and mass tridiagonal oracles") {
  GridSpec g = build_grid(0, 2.0, 2);
  FemMatrices fem = assemble(g);
  double a = g.a;
  Eigen::MatrixXd S = Eigen::MatrixXd(fem.stiffness);
  Eigen::MatrixXd M = Eigen::MatrixXd(fem.mass);
  for (long i = 0; i < g.N; ++i) {
    CHECK(S(i, i) == doctest::Approx(2.0 / a).epsilon(1e-13));
    CHECK(M(i, i) == doctest::Approx(4.0 * a / 6.0).epsilon(1e-13));
    if (i + 1 < g.N) {
      CHECK(S(i, i + 1) == doctest::Approx(-1.0 / a).epsilon(1e-13));
      CHECK(M(i, i + 1) == doctest::Approx(a / 6.0).epsilon(1e-13));
    }
    if (i + 2 < g.N) CHECK(S(i, i + 2) == doctest::Approx(0.0));
  }
}

TEST_CASE("2D interior stiffness stencil of the Kuhn triangulation") {
  GridSpec g = build_grid(1, 2.0, 4);
  FemMatrices fem = assemble(g);
  std::vector<long> jc = {2};
  long c = g.free_index(0, jc);
  Eigen::MatrixXd S = Eigen::MatrixXd(fem.stiffness);
  CHECK(S(c, c) == doctest::Approx(4.0).epsilon(1e-12));
  std::vector<long> jn = {1};
  CHECK(S(c, g.free_index(0, jn)) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(S(c, g.free_index(1, jc)) == doctest::Approx(-1.0).epsilon(1e-12));
  std::vector<long> jd = {3};
  CHECK(S(c, g.free_index(1, jd)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(S.row(c).sum()) < 1e-12);
}

TEST_CASE("quadratic forms positive for random nonzero vectors") {
  for (int d : {0, 1}) {
    GridSpec g = build_grid(d, 2.0, 4);
    FemMatrices fem = assemble(g);
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
      Vec v = rng.normal_vec(g.N);
      CHECK(v.dot(fem.stiffness * v) > 0.0);
      CHECK(v.dot(fem.mass * v) > 0.0);
    }
    CHECK((Eigen::MatrixXd(fem.stiffness) - Eigen::MatrixXd(fem.stiffness).transpose())
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
}

TEST_CASE("ramp energy, membership and decomposition identity") {
  for (int d : {0, 1}) {
    GridSpec g = build_grid(d, 2.0, 4);
    FemMatrices fem = assemble(g);
    CHECK(fem.ramp_energy == doctest::Approx(1.0));  // 2/L at L = 2

    Vec le = fem.ramp_field.ext_values();
    CHECK(le.dot(fem.stiff_ext * le) == doctest::Approx(2.0 / g.LD).epsilon(1e-12));

    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
      Field h(g, Field::Boundary::ramp, rng.normal_vec(g.N));
      Vec he = h.ext_values();
      double grad_sq = he.dot(fem.stiff_ext * he);
      Vec w = h.coeffs - fem.ramp_field.coeffs;
      double decomposed = w.dot(fem.stiffness * w) + 2.0 / g.LD;
      CHECK(grad_sq == doctest::Approx(decomposed).epsilon(1e-10));
    }
  }
}

TEST_CASE("norm exactness: matrix forms match per-simplex analytic integration") {
  // independent oracle: hardcoded P1 element integrals on the two right
  // triangles of each square, assembled by hand at d=1
  GridSpec g = build_grid(1, 1.0, 2);
  FemMatrices fem = assemble(g);
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    Field h(g, Field::Boundary::zero, rng.normal_vec(g.N));
    Vec e = h.ext_values();
    double l2 = 0, h1 = 0;
    for (long k = -g.floorLa; k < g.floorLa; ++k) {
      for (long jy = 0; jy < g.n; ++jy) {
        std::vector<long> j0 = {jy}, j1 = {jy + 1};
        double v00 = e[g.ext_index(k, j0)], v10 = e[g.ext_index(k + 1, j0)];
        double v01 = e[g.ext_index(k, j1)], v11 = e[g.ext_index(k + 1, j1)];
        double A = 0.5 * g.a * g.a;
        auto tri = [&](double p, double q, double r) {
          l2 += A / 6.0 * (p * p + q * q + r * r + p * q + p * r + q * r);
        };
        // Kuhn diagonal from (0,0) to (1,1)
        tri(v00, v10, v11);
        tri(v00, v01, v11);
        // right-triangle gradients: legs along the axes
        h1 += 0.5 * ((v10 - v00) * (v10 - v00) + (v11 - v10) * (v11 - v10));
        h1 += 0.5 * ((v11 - v01) * (v11 - v01) + (v01 - v00) * (v01 - v00));
      }
    }
    CHECK(h.coeffs.dot(fem.mass * h.coeffs) == doctest::Approx(l2).epsilon(1e-10));
    CHECK(h.coeffs.dot(fem.stiffness * h.coeffs) == doctest::Approx(h1).epsilon(1e-10));
  }
}

TEST_CASE("slice-Gauss integrator agrees with mass matrix on affine g") {
  for (int d : {0, 1, 2}) {
    GridSpec g = build_grid(d, 2.0, d == 2 ? 2 : 4);
    FemMatrices fem = assemble(g);
    Rng rng(17);
    Vec ext = rng.normal_vec(g.ext_count());
    auto gfun = [](double x) { return 0.7 - 0.3 * x; };
    Vec gn(g.ext_count());
    for (long i = 0; i < g.ext_count(); ++i) gn[i] = gfun(fem.ext_x[i]);
    double via_mass = ext.dot(fem.mass_ext * gn);
    double via_slice = integrate_field_xfunc(fem, ext, gfun);
    CHECK(via_slice == doctest::Approx(via_mass).epsilon(1e-12));

    Vec load = load_vector_xfunc(fem, gfun);
    Vec load_mass = fem.mass_ext * gn;
    CHECK((load - load_mass).cwiseAbs().maxCoeff() < 1e-12);

    // x-derivative integrator against the stiffness route:
    // int dx(h) g = h^T S_ext l * scale when g = const
    double c = integrate_xderiv_xfunc(fem, ext, [](double) { return 1.0; });
    // direct: sum over simplices is what dirderiv-type code does; cross-check
    // with the ramp: int dx(h) * 1 = boundary telescoping of transverse means
    Vec ramp_ext = fem.ramp_field.ext_values();
    double cross = ramp_ext.dot(fem.stiff_ext * ext) * g.LD;
    CHECK(c == doctest::Approx(cross).epsilon(1e-10));
  }
}

TEST_CASE("exact polynomial potential integrals") {
  GridSpec g = build_grid(1, 2.0, 4);
  FemMatrices fem = assemble(g);
  Rng rng(19);
  Vec ext = rng.normal_vec(g.ext_count());

  // F = u^2: integral equals the mass quadratic form
  double viaM = ext.dot(fem.mass_ext * ext);
  double viaP = integrate_potential(fem, ext, {0.0, 0.0, 1.0});
  CHECK(viaP == doctest::Approx(viaM).epsilon(1e-12));

  // gradient of int F(h): finite differences
  std::vector<double> quartic = {0.25, 0.0, -0.5, 0.0, 0.25};
  std::vector<double> dquartic = {0.0, -1.0, 0.0, 1.0};
  Vec grad = potential_load(fem, ext, dquartic);
  Rng rng2(23);
  for (int t = 0; t < 12; ++t) {
    long i = rng2.integer() % g.ext_count();
    double hstep = 1e-6;
    Vec ep = ext, em = ext;
    ep[i] += hstep;
    em[i] -= hstep;
    double fd = (integrate_potential(fem, ep, quartic) -
                 integrate_potential(fem, em, quartic)) / (2 * hstep);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("d=0 potential integral against dense quadrature") {
  GridSpec g = build_grid(0, 2.0, 4);
  FemMatrices fem = assemble(g);
  Rng rng(29);
  Field h(g, Field::Boundary::ramp, rng.normal_vec(g.N));
  Vec ext = h.ext_values();
  std::vector<double> quartic = {0.25, 0.0, -0.5, 0.0, 0.25};
  double exact = integrate_potential(fem, ext, quartic);
  // dense Simpson on the piecewise-linear interpolant
  long M = 200000;
  double acc = 0, lo = -g.LD, hi = g.LD, step = (hi - lo) / M;
  auto F = [&](double u) { return 0.25 * (u * u - 1) * (u * u - 1); };
  for (long i = 0; i <= M; ++i) {
    double x = lo + i * step;
    double w = (i == 0 || i == M) ? 1 : (i % 2 ? 4 : 2);
    acc += w * F(interpolate(h, std::vector<double>{x}));
  }
  acc *= step / 3.0;
  CHECK(exact == doctest::Approx(acc).epsilon(1e-8));
}

TEST_CASE("mass eigen floor: oracle, scaling, certification") {
  GridSpec g1 = build_grid(0, 2.0, 4);
  FemMatrices f1 = assemble(g1);
  double lam1 = mass_eigen_floor(f1);
  double a = g1.a;
  long N = g1.N;
  double oracle = (a / 6.0) * (4.0 - 2.0 * std::cos(M_PI / (N + 1)));
  CHECK(lam1 == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(lam1 >= a / 3.0);

  GridSpec g2 = build_grid(0, 2.0, 8);
  double lam2 = mass_eigen_floor(assemble(g2));
  CHECK(lam2 / lam1 == doctest::Approx(0.5).epsilon(0.05));  // ~ a at d=0

  GridSpec g3 = build_grid(1, 2.0, 4);
  CHECK(mass_eigen_floor(assemble(g3)) > 0.0);
}

TEST_CASE("matrix market writer emits a symmetric coordinate header") {
  GridSpec g = build_grid(0, 2.0, 2);
  FemMatrices fem = assemble(g);
  auto path = std::filesystem::temp_directory_path() / "ac_stiff.mtx";
  write_matrix_market(fem.stiffness, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "%%MatrixMarket matrix coordinate real symmetric");
  long r, c, nnz;
  in >> r >> c >> nnz;
  CHECK(r == g.N);
  CHECK(nnz == 2 * g.N - 1);
  std::filesystem::remove(path);
}
