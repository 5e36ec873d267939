#pragma once

#include <array>
#include <span>
#include <vector>

#include "ac/core.hpp"

namespace ac {

// Lattice domain D_{L,a} on the cuboid (-L, L) x (0,1)^d with mesh a = 1/n.
// Free nodes occupy the x-layers k in [-(floorLa-1), floorLa-1]; the layers
// k = +-floorLa carry the boundary values (+-1 for ramp fields, 0 otherwise),
// so every field satisfies its boundary condition at x = +-LD exactly.
// Integrals run over [-LD, LD] x [0,1]^d with LD = floorLa * a; fields are
// constant beyond, contributing nothing to energies.
struct GridSpec {
  int d = 0;          // transverse dimension
  double L = 0;       // requested half-length
  int n = 1;          // a = 1/n
  double a = 1;       // mesh size
  long floorLa = 0;   // floor(L / a)
  double LD = 0;      // effective half-length floorLa * a
  long N = 0;         // free degrees of freedom
  long ny = 1;        // nodes per transverse direction (n + 1)
  long nx_free = 0;   // 2 floorLa - 1
  long nx_ext = 0;    // 2 floorLa + 1

  long ext_count() const;
  long dim() const { return d + 1; }

  // lexicographic enumeration in (x, y_1, ..., y_d)
  long free_index(long k, std::span<const long> j) const;   // k in [-(m-1), m-1]
  long ext_index(long k, std::span<const long> j) const;    // k in [-m, m]
  bool is_free_layer(long k) const { return std::abs(k) <= floorLa - 1; }
  void ext_coords(long idx, long& k, std::vector<long>& j) const;
  // physical coordinates of an extended node
  void node_point(long k, std::span<const long> j, std::vector<double>& pt) const;
};

GridSpec build_grid(int d, double L, int n);

// One Kuhn simplex of the unit cube: D+1 vertex offsets in {0,1}^D, in the
// order generated by the defining coordinate permutation.
struct KuhnSimplex {
  std::vector<std::array<int, 8>> vertices;  // offsets, component c in [0, D)
  int dim = 0;
};

// Kuhn (Freudenthal) triangulation: (d+1)! simplices indexed by coordinate
// orderings, tiling the cube with disjoint interiors.
std::vector<KuhnSimplex> subdivide_cube(int space_dim);

struct Field {
  enum class Boundary { ramp, zero };

  const GridSpec* grid = nullptr;
  Boundary boundary = Boundary::ramp;
  Vec coeffs;

  Field() = default;
  Field(const GridSpec& g, Boundary b) : grid(&g), boundary(b), coeffs(Vec::Zero(g.N)) {}
  Field(const GridSpec& g, Boundary b, Vec c) : grid(&g), boundary(b), coeffs(std::move(c)) {}

  double boundary_value(int sign) const {
    return boundary == Boundary::ramp ? double(sign) : 0.0;
  }
  // nodal values over all extended nodes (free plus pinned boundary layers)
  Vec ext_values() const;
};

// Barycentric interpolation within the containing Kuhn simplex; boundary
// extension values beyond |x| >= LD.
double interpolate(const Field& field, std::span<const double> point);

// Same, with the extended nodal vector precomputed (hot paths).
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const Field& f)
      : grid_(f.grid), boundary_(f.boundary), ext_(f.ext_values()) {}
  double operator()(std::span<const double> point) const;

 private:
  const GridSpec* grid_;
  Field::Boundary boundary_;
  Vec ext_;
};

}  // namespace ac
