#include "ac/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ac {

namespace {
long ipow(long b, int e) {
  long r = 1;
  while (e-- > 0) r *= b;
  return r;
}
}  // namespace

GridSpec build_grid(int d, double L, int n) {
  if (d < 0) throw std::invalid_argument("build_grid: d must be >= 0");
  if (n < 2) throw std::invalid_argument("build_grid: n must be >= 2");
  GridSpec g;
  g.d = d;
  g.L = L;
  g.n = n;
  g.a = 1.0 / n;
  double q = L / g.a;
  g.floorLa = static_cast<long>(std::floor(q + 1e-9));  // guard L/a = integer
  if (L < 2.0 * g.a || g.floorLa < 2)
    throw std::invalid_argument("build_grid: L < 2a leaves no interior x-nodes");
  g.LD = g.floorLa * g.a;
  g.ny = n + 1;
  g.nx_free = 2 * g.floorLa - 1;
  g.nx_ext = 2 * g.floorLa + 1;
  g.N = g.nx_free * ipow(g.ny, d);
  return g;
}

long GridSpec::ext_count() const { return nx_ext * ipow(ny, d); }

long GridSpec::free_index(long k, std::span<const long> j) const {
  long idx = k + (floorLa - 1);
  for (int i = 0; i < d; ++i) idx = idx * ny + j[i];
  return idx;
}

long GridSpec::ext_index(long k, std::span<const long> j) const {
  long idx = k + floorLa;
  for (int i = 0; i < d; ++i) idx = idx * ny + j[i];
  return idx;
}

void GridSpec::ext_coords(long idx, long& k, std::vector<long>& j) const {
  j.assign(d, 0);
  for (int i = d - 1; i >= 0; --i) {
    j[i] = idx % ny;
    idx /= ny;
  }
  k = idx - floorLa;
}

void GridSpec::node_point(long k, std::span<const long> j, std::vector<double>& pt) const {
  pt.assign(d + 1, 0.0);
  pt[0] = k * a;
  for (int i = 0; i < d; ++i) pt[i + 1] = j[i] * a;
}

std::vector<KuhnSimplex> subdivide_cube(int space_dim) {
  std::vector<int> perm(space_dim);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<KuhnSimplex> out;
  do {
    KuhnSimplex s;
    s.dim = space_dim;
    std::array<int, 8> v{};
    s.vertices.push_back(v);
    for (int c : perm) {
      v[c] = 1;
      s.vertices.push_back(v);
    }
    out.push_back(std::move(s));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

Vec Field::ext_values() const {
  const GridSpec& g = *grid;
  Vec e(g.ext_count());
  std::vector<long> j(g.d, 0);
  long ynodes = 1;
  for (int i = 0; i < g.d; ++i) ynodes *= g.ny;
  for (long k = -g.floorLa; k <= g.floorLa; ++k) {
    bool free_layer = g.is_free_layer(k);
    double bval = boundary_value(k > 0 ? 1 : -1);
    for (long y = 0; y < ynodes; ++y) {
      long rem = y;
      for (int i = g.d - 1; i >= 0; --i) {
        j[i] = rem % g.ny;
        rem /= g.ny;
      }
      e[g.ext_index(k, j)] = free_layer ? coeffs[g.free_index(k, j)] : bval;
    }
  }
  return e;
}

namespace {

double interpolate_ext(const GridSpec& g, Field::Boundary b, const Vec& ext,
                       std::span<const double> point) {
  double bval = (b == Field::Boundary::ramp) ? 1.0 : 0.0;
  double x = point[0];
  if (x >= g.LD) return bval;
  if (x <= -g.LD) return -bval;

  // containing cell and local coordinates
  const int D = g.d + 1;
  std::vector<long> cell(D);
  std::vector<double> t(D);
  cell[0] = static_cast<long>(std::floor((x + g.LD) / g.a));
  cell[0] = std::clamp<long>(cell[0], 0, g.nx_ext - 2);
  t[0] = (x + g.LD) / g.a - cell[0];
  for (int i = 1; i < D; ++i) {
    double y = std::clamp(point[i], 0.0, 1.0);
    long c = std::clamp<long>(static_cast<long>(std::floor(y / g.a)), 0, g.n - 1);
    cell[i] = c;
    t[i] = y / g.a - c;
  }

  // Kuhn simplex containing t: sort coordinates descending
  std::vector<int> ord(D);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int u, int v) { return t[u] > t[v]; });

  // barycentric weights: lambda_0 = 1 - t_(1), lambda_j = t_(j) - t_(j+1)
  std::vector<long> j(g.d);
  auto vertex_value = [&](const std::vector<int>& offs) {
    long k = cell[0] - g.floorLa + offs[0];
    for (int i = 0; i < g.d; ++i) j[i] = cell[i + 1] + offs[i + 1];
    return ext[g.ext_index(k, j)];
  };

  std::vector<int> offs(D, 0);
  double result = (1.0 - t[ord[0]]) * vertex_value(offs);
  for (int s = 0; s < D; ++s) {
    offs[ord[s]] = 1;
    double lam = (s + 1 < D) ? t[ord[s]] - t[ord[s + 1]] : t[ord[s]];
    result += lam * vertex_value(offs);
  }
  return result;
}

}  // namespace

double interpolate(const Field& field, std::span<const double> point) {
  return interpolate_ext(*field.grid, field.boundary, field.ext_values(), point);
}

double FieldEvaluator::operator()(std::span<const double> point) const {
  return interpolate_ext(*grid_, boundary_, ext_, point);
}

}  // namespace ac
