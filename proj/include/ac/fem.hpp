#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ac/core.hpp"
#include "ac/grid.hpp"

namespace ac {

// Exact P1 element data for one Kuhn simplex (unit cube scaled by a).
struct ElementData {
  std::vector<long> offsets_flat;         // vertex offset -> flattened index stride
  Eigen::MatrixXd grad;                   // (D+1) x D, gradients on the a-cube
  Eigen::MatrixXd stiffness;              // (D+1) x (D+1)
  Eigen::MatrixXd mass;                   // (D+1) x (D+1)
  double vol = 0;                         // a^D / D!
  int p = 0, q = 0;                       // #vertices on the lower/upper x-face
  std::vector<int> bottom, top;           // local vertex ids by x-face
  std::vector<std::array<int, 8>> offs;   // raw vertex offsets
};

// P1 matrices over the lattice. `stiffness`/`mass` act on free coefficients
// (the Lambda and I of the measure densities); the `_ext` variants include the
// pinned boundary layers so that ramp energies and collar contributions are
// exact.
struct FemMatrices {
  GridSpec grid;
  SpMat stiffness, mass;        // free x free
  SpMat stiff_ext, mass_ext;    // extended x extended
  Field ramp_field;             // l(x, y) = x / LD
  double ramp_energy = 0;       // int |grad l|^2 = 2 / LD
  std::vector<ElementData> elements;
  std::vector<long> ext_to_free;  // -1 for boundary nodes
  Vec ext_x;                      // x-coordinate per extended node

  long ext_of(long cell_flat, long vertex_stride) const {
    return cell_flat + vertex_stride;
  }
};

FemMatrices assemble(const GridSpec& grid);

// Smallest eigenvalue of the mass matrix by inverse power iteration. Checks
// the per-cube floor <u, I u> >= C a^{d+1} <u, u> with C certified from the
// single-cube element matrix. Throws NoConvergence after 10000 iterations.
double mass_eigen_floor(const FemMatrices& fem);
double mass_cube_floor_constant(const FemMatrices& fem);  // the certified C

// ---- integration helpers ----------------------------------------------------
// All take nodal values over extended nodes and integrate over
// [-LD, LD] x [0,1]^d. Products with a smooth x-only factor g use exact
// transverse slicing composed with Gauss quadrature in x per simplex.

// int_D h(z) g(x) dz
double integrate_field_xfunc(const FemMatrices& fem, const Vec& ext,
                             const std::function<double(double)>& g, int gauss_pts = 5);
// int_D (dh/dx)(z) g(x) dz
double integrate_xderiv_xfunc(const FemMatrices& fem, const Vec& ext,
                              const std::function<double(double)>& g, int gauss_pts = 5);
// load vector L_v = int_D phi_v(z) g(x) dz over extended nodes
Vec load_vector_xfunc(const FemMatrices& fem, const std::function<double(double)>& g,
                      int gauss_pts = 5);
// int_D (d h / d coordinate_axis)^2 dz
double dirderiv_sq(const FemMatrices& fem, const Vec& ext, int axis);

// Exact integral of a polynomial potential of the nodal field:
// int_D F(h(z)) dz via complete homogeneous symmetric sums per simplex.
double integrate_potential(const FemMatrices& fem, const Vec& ext,
                           const std::vector<double>& poly_coeffs);
// gradient of the above w.r.t. nodal values, accumulated over extended nodes
Vec potential_load(const FemMatrices& fem, const Vec& ext,
                   const std::vector<double>& dpoly_coeffs);

// Gauss-Legendre nodes/weights on [0,1]
void gauss01(int npts, std::vector<double>& nodes, std::vector<double>& weights);

void write_matrix_market(const SpMat& m, const std::string& path);

}  // namespace ac
