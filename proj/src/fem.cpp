#include "ac/fem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ac {

namespace {

double factorial(int k) {
  double r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// multi-index iterator over [0, n)^d
struct CellIter {
  int d;
  long n;
  std::vector<long> j;
  bool done = false;
  CellIter(int d_, long n_) : d(d_), n(n_), j(d_, 0) { done = (n <= 0 && d > 0); }
  void next() {
    for (int i = d - 1; i >= 0; --i) {
      if (++j[i] < n) return;
      j[i] = 0;
    }
    done = true;
  }
};

// complete homogeneous symmetric polynomials h_0..h_jmax of the given values
void chs(const double* vals, int nvals, int jmax, double* out) {
  out[0] = 1.0;
  for (int j = 1; j <= jmax; ++j) out[j] = 0.0;
  for (int v = 0; v < nvals; ++v)
    for (int j = 1; j <= jmax; ++j) out[j] += vals[v] * out[j - 1];
}

}  // namespace

void gauss01(int npts, std::vector<double>& nodes, std::vector<double>& weights) {
  // Gauss-Legendre by Newton iteration on P_n, mapped to [0,1]
  nodes.resize(npts);
  weights.resize(npts);
  int mhalf = (npts + 1) / 2;
  for (int i = 0; i < mhalf; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int k = 0; k < npts; ++k) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * k + 1.0) * z * p2 - k * p3) / (k + 1);
      }
      pp = npts * (z * p1 - p2) / (z * z - 1.0);
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    nodes[i] = 0.5 * (1.0 - z);
    nodes[npts - 1 - i] = 0.5 * (1.0 + z);
    double w = 1.0 / ((1.0 - z * z) * pp * pp);
    weights[i] = w;
    weights[npts - 1 - i] = w;
  }
}

FemMatrices assemble(const GridSpec& grid) {
  FemMatrices fem;
  fem.grid = grid;
  const int D = grid.d + 1;
  const double a = grid.a;

  // element strides in the extended index space
  std::vector<long> stride(D);
  stride[0] = 1;
  for (int i = 0; i < grid.d; ++i) stride[0] *= grid.ny;  // x stride = ny^d
  for (int i = 0; i < grid.d; ++i) {
    long s = 1;
    for (int r = i + 1; r < grid.d; ++r) s *= grid.ny;
    stride[i + 1] = s;
  }

  auto simplices = subdivide_cube(D);
  for (const auto& s : simplices) {
    ElementData el;
    el.offs = s.vertices;
    el.p = 0;
    for (int i = 0; i <= D; ++i) {
      long fl = 0;
      for (int c = 0; c < D; ++c) fl += s.vertices[i][c] * stride[c];
      el.offsets_flat.push_back(fl);
      if (s.vertices[i][0] == 0) {
        el.bottom.push_back(i);
      } else {
        el.top.push_back(i);
      }
    }
    el.p = static_cast<int>(el.bottom.size());
    el.q = static_cast<int>(el.top.size());

    Eigen::MatrixXd E(D, D);
    for (int jv = 1; jv <= D; ++jv)
      for (int c = 0; c < D; ++c)
        E(c, jv - 1) = a * (s.vertices[jv][c] - s.vertices[0][c]);
    Eigen::MatrixXd Einv = E.inverse();
    el.vol = std::abs(E.determinant()) / factorial(D);
    el.grad.resize(D + 1, D);
    for (int i = 1; i <= D; ++i) el.grad.row(i) = Einv.row(i - 1);
    el.grad.row(0) = -el.grad.bottomRows(D).colwise().sum();

    el.stiffness.resize(D + 1, D + 1);
    el.mass.resize(D + 1, D + 1);
    for (int i = 0; i <= D; ++i)
      for (int jv = 0; jv <= D; ++jv) {
        el.stiffness(i, jv) = el.vol * el.grad.row(i).dot(el.grad.row(jv));
        el.mass(i, jv) = el.vol * (i == jv ? 2.0 : 1.0) / double((D + 1) * (D + 2));
      }
    fem.elements.push_back(std::move(el));
  }

  // extended node bookkeeping
  long ext_n = grid.ext_count();
  fem.ext_to_free.assign(ext_n, -1);
  fem.ext_x.resize(ext_n);
  {
    std::vector<long> j;
    for (long idx = 0; idx < ext_n; ++idx) {
      long k;
      grid.ext_coords(idx, k, j);
      fem.ext_x[idx] = k * a;
      if (grid.is_free_layer(k)) fem.ext_to_free[idx] = grid.free_index(k, j);
    }
  }

  // assemble over cubes (ordered, deterministic)
  std::vector<Triplet> text, tfree, mext, mfree;
  for (long k = -grid.floorLa; k < grid.floorLa; ++k) {
    for (CellIter ci(grid.d, grid.n); !ci.done; ci.next()) {
      long cell_flat = grid.ext_index(k, ci.j);
      for (const auto& el : fem.elements) {
        for (std::size_t i = 0; i < el.offsets_flat.size(); ++i) {
          long gi = cell_flat + el.offsets_flat[i];
          for (std::size_t jv = 0; jv < el.offsets_flat.size(); ++jv) {
            long gj = cell_flat + el.offsets_flat[jv];
            text.emplace_back(gi, gj, el.stiffness(i, jv));
            mext.emplace_back(gi, gj, el.mass(i, jv));
            long fi = fem.ext_to_free[gi], fj = fem.ext_to_free[gj];
            if (fi >= 0 && fj >= 0) {
              tfree.emplace_back(fi, fj, el.stiffness(i, jv));
              mfree.emplace_back(fi, fj, el.mass(i, jv));
            }
          }
        }
      }
    }
  }
  fem.stiff_ext.resize(ext_n, ext_n);
  fem.stiff_ext.setFromTriplets(text.begin(), text.end());
  fem.mass_ext.resize(ext_n, ext_n);
  fem.mass_ext.setFromTriplets(mext.begin(), mext.end());
  fem.stiffness.resize(grid.N, grid.N);
  fem.stiffness.setFromTriplets(tfree.begin(), tfree.end());
  fem.mass.resize(grid.N, grid.N);
  fem.mass.setFromTriplets(mfree.begin(), mfree.end());

  fem.ramp_field = Field(fem.grid, Field::Boundary::ramp);
  {
    std::vector<long> j;
    for (long idx = 0; idx < ext_n; ++idx) {
      long f = fem.ext_to_free[idx];
      if (f >= 0) fem.ramp_field.coeffs[f] = fem.ext_x[idx] / grid.LD;
    }
  }
  fem.ramp_energy = 2.0 / grid.LD;
  return fem;
}

double mass_cube_floor_constant(const FemMatrices& fem) {
  const int D = fem.grid.d + 1;
  long nv = 1L << D;
  Eigen::MatrixXd cube = Eigen::MatrixXd::Zero(nv, nv);
  for (const auto& el : fem.elements) {
    for (std::size_t i = 0; i < el.offs.size(); ++i) {
      long li = 0;
      for (int c = 0; c < D; ++c) li |= long(el.offs[i][c]) << c;
      for (std::size_t jv = 0; jv < el.offs.size(); ++jv) {
        long lj = 0;
        for (int c = 0; c < D; ++c) lj |= long(el.offs[jv][c]) << c;
        cube(li, lj) += el.mass(i, jv);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cube);
  return es.eigenvalues().minCoeff() / std::pow(fem.grid.a, D);
}

double mass_eigen_floor(const FemMatrices& fem) {
  Eigen::SimplicialLDLT<SpMat> solver(fem.mass);
  if (solver.info() != Eigen::Success) throw NoConvergence("mass factorization failed");
  Vec v = Vec::Ones(fem.grid.N).normalized();
  double lambda = 0, prev = -1;
  int it = 0;
  for (; it < 10000; ++it) {
    Vec w = solver.solve(v);
    v = w.normalized();
    lambda = v.dot(fem.mass * v);
    if (std::abs(lambda - prev) <= 1e-13 * std::abs(lambda)) break;
    prev = lambda;
  }
  if (it >= 10000) throw NoConvergence("mass_eigen_floor: power iteration stalled");
  double C = mass_cube_floor_constant(fem);
  double floor = C * std::pow(fem.grid.a, fem.grid.d + 1);
  if (lambda < floor * (1.0 - 1e-9))
    throw std::logic_error("mass eigenvalue below the certified per-cube floor");
  return lambda;
}

// ---- slice-Gauss integration ------------------------------------------------
//
// Every Kuhn simplex has p vertices on its lower x-face and q on the upper.
// The slice at x = x0 + t a is affinely a product of simplices with volume
// proportional to t^{q-1} (1-t)^{p-1}, and the slice integral of an affine
// field is the slice volume times the value at the slice centroid
// (1-t) mean(bottom) + t mean(top).

namespace {

template <class PerSimplex>
void for_each_simplex(const FemMatrices& fem, PerSimplex&& fn) {
  const GridSpec& g = fem.grid;
  for (long k = -g.floorLa; k < g.floorLa; ++k) {
    double xl = k * g.a;
    for (CellIter ci(g.d, g.n); !ci.done; ci.next()) {
      long cell_flat = g.ext_index(k, ci.j);
      for (const auto& el : fem.elements) fn(el, cell_flat, xl);
    }
  }
}

struct SliceRule {
  std::vector<double> t, w;
  explicit SliceRule(int npts) { gauss01(npts, t, w); }
};

}  // namespace

double integrate_field_xfunc(const FemMatrices& fem, const Vec& ext,
                             const std::function<double(double)>& g, int gauss_pts) {
  SliceRule rule(gauss_pts);
  const double a = fem.grid.a;
  const int D = fem.grid.d + 1;
  double total = 0.0;
  for_each_simplex(fem, [&](const ElementData& el, long cell, double xl) {
    double fA = 0, fB = 0;
    for (int i : el.bottom) fA += ext[cell + el.offsets_flat[i]];
    for (int i : el.top) fB += ext[cell + el.offsets_flat[i]];
    fA /= el.p;
    fB /= el.q;
    double beta = factorial(el.q - 1) * factorial(el.p - 1) / factorial(D);
    double c = el.vol / beta;
    double acc = 0;
    for (std::size_t gq = 0; gq < rule.t.size(); ++gq) {
      double t = rule.t[gq];
      double wpoly = std::pow(t, el.q - 1) * std::pow(1.0 - t, el.p - 1);
      acc += rule.w[gq] * wpoly * ((1.0 - t) * fA + t * fB) * g(xl + t * a);
    }
    total += c * acc;
  });
  return total;
}

double integrate_xderiv_xfunc(const FemMatrices& fem, const Vec& ext,
                              const std::function<double(double)>& g, int gauss_pts) {
  SliceRule rule(gauss_pts);
  const double a = fem.grid.a;
  const int D = fem.grid.d + 1;
  double total = 0.0;
  for_each_simplex(fem, [&](const ElementData& el, long cell, double xl) {
    double dx = 0;
    for (std::size_t i = 0; i < el.offsets_flat.size(); ++i)
      dx += ext[cell + el.offsets_flat[i]] * el.grad(i, 0);
    double beta = factorial(el.q - 1) * factorial(el.p - 1) / factorial(D);
    double c = el.vol / beta;
    double acc = 0;
    for (std::size_t gq = 0; gq < rule.t.size(); ++gq) {
      double t = rule.t[gq];
      acc += rule.w[gq] * std::pow(t, el.q - 1) * std::pow(1.0 - t, el.p - 1) * g(xl + t * a);
    }
    total += c * dx * acc;
  });
  return total;
}

Vec load_vector_xfunc(const FemMatrices& fem, const std::function<double(double)>& g,
                      int gauss_pts) {
  SliceRule rule(gauss_pts);
  const double a = fem.grid.a;
  const int D = fem.grid.d + 1;
  Vec load = Vec::Zero(fem.grid.ext_count());
  for_each_simplex(fem, [&](const ElementData& el, long cell, double xl) {
    double beta = factorial(el.q - 1) * factorial(el.p - 1) / factorial(D);
    double c = el.vol / beta;
    double accA = 0, accB = 0;
    for (std::size_t gq = 0; gq < rule.t.size(); ++gq) {
      double t = rule.t[gq];
      double wpoly = rule.w[gq] * std::pow(t, el.q - 1) * std::pow(1.0 - t, el.p - 1);
      double gv = g(xl + t * a);
      accA += wpoly * (1.0 - t) * gv;
      accB += wpoly * t * gv;
    }
    for (int i : el.bottom) load[cell + el.offsets_flat[i]] += c * accA / el.p;
    for (int i : el.top) load[cell + el.offsets_flat[i]] += c * accB / el.q;
  });
  return load;
}

double dirderiv_sq(const FemMatrices& fem, const Vec& ext, int axis) {
  double total = 0.0;
  for_each_simplex(fem, [&](const ElementData& el, long cell, double) {
    double dv = 0;
    for (std::size_t i = 0; i < el.offsets_flat.size(); ++i)
      dv += ext[cell + el.offsets_flat[i]] * el.grad(i, axis);
    total += el.vol * dv * dv;
  });
  return total;
}

double integrate_potential(const FemMatrices& fem, const Vec& ext,
                           const std::vector<double>& poly) {
  const int D = fem.grid.d + 1;
  const int deg = static_cast<int>(poly.size()) - 1;
  std::vector<double> fac(D + deg + 2);
  fac[0] = 1;
  for (std::size_t i = 1; i < fac.size(); ++i) fac[i] = fac[i - 1] * i;
  double vals[8], h[16];
  double total = 0.0;
  for_each_simplex(fem, [&](const ElementData& el, long cell, double) {
    for (std::size_t i = 0; i < el.offsets_flat.size(); ++i)
      vals[i] = ext[cell + el.offsets_flat[i]];
    chs(vals, D + 1, deg, h);
    double s = 0;
    for (int j = 0; j <= deg; ++j) s += poly[j] * fac[j] * fac[D] / fac[D + j] * h[j];
    total += el.vol * s;
  });
  return total;
}

Vec potential_load(const FemMatrices& fem, const Vec& ext, const std::vector<double>& dpoly) {
  const int D = fem.grid.d + 1;
  const int deg = static_cast<int>(dpoly.size()) - 1;
  std::vector<double> fac(D + deg + 3);
  fac[0] = 1;
  for (std::size_t i = 1; i < fac.size(); ++i) fac[i] = fac[i - 1] * i;
  Vec load = Vec::Zero(fem.grid.ext_count());
  double vals[8], valsx[9], h[16], hx[16];
  for_each_simplex(fem, [&](const ElementData& el, long cell, double) {
    const int nv = static_cast<int>(el.offsets_flat.size());
    for (int i = 0; i < nv; ++i) vals[i] = ext[cell + el.offsets_flat[i]];
    chs(vals, nv, deg, h);
    for (int v = 0; v < nv; ++v) {
      // chs of the multiset with vals[v] duplicated
      std::copy(vals, vals + nv, valsx);
      valsx[nv] = vals[v];
      chs(valsx, nv + 1, deg > 0 ? deg - 1 : 0, hx);
      double s = 0;
      for (int j = 0; j <= deg; ++j) {
        double inner = h[j] + (j > 0 ? vals[v] * hx[j - 1] : 0.0);
        s += dpoly[j] * fac[j] * fac[D] / fac[D + j + 1] * inner;
      }
      load[cell + el.offsets_flat[v]] += el.vol * s;
    }
  });
  return load;
}

void write_matrix_market(const SpMat& m, const std::string& path) {
  std::ofstream out(path);
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  long nnz_lower = 0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (it.row() >= it.col()) ++nnz_lower;
  out << m.rows() << " " << m.cols() << " " << nnz_lower << "\n";
  out.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (it.row() >= it.col())
        out << (it.row() + 1) << " " << (it.col() + 1) << " " << it.value() << "\n";
}

}  // namespace ac
