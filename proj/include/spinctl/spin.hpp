#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace spinctl {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;

enum class Axis { X, Y, Z };

// Pure state of N two-mode bosons in the Dicke basis:
//   |Psi> = sum_m c_m |m>,  m = -N/2 ... N/2,
// stored with amplitude index k = m + N/2 (m ascending).
struct DickeState {
  int n_particles = 0;
  CVector amplitudes;

  int dim() const { return n_particles + 1; }
  double spin() const { return 0.5 * n_particles; }
  // m value for amplitude index k
  double m_of(int k) const { return k - spin(); }
};

// Dense collective-spin operators in the Dicke basis. jz is diagonal with
// entries m; jx is real symmetric tridiagonal; jy is imaginary antisymmetric.
// The Jx eigendecomposition (jx = V diag(d) V^T) is kept alongside because
// every x- and y-rotation runs through it.
struct CollectiveOperators {
  int n_particles = 0;
  Eigen::MatrixXd jx;
  Eigen::MatrixXcd jy;
  Eigen::MatrixXd jz;
  Eigen::MatrixXd jx_eigvecs;
  Eigen::VectorXd jx_eigvals;

  int dim() const { return n_particles + 1; }
  double spin() const { return 0.5 * n_particles; }
};

// Direction on the Bloch sphere, theta in [0, pi], phi in [0, 2*pi).
struct BlochDirection {
  double theta = 0.0;
  double phi = 0.0;
};

struct SpinMoments {
  double mean_x = 0, mean_y = 0, mean_z = 0;
  double var_x = 0, var_y = 0, var_z = 0;
};

CollectiveOperators build_operators(int n_particles);

// Jz eigenstate |m>. m must be one of -N/2, -N/2+1, ..., N/2.
DickeState jz_eigenstate(int n_particles, double m);

// exp(-i angle J_axis) |state>. All rotations in this codebase carry the
// Hamiltonian-generated sign; a pulse of angle theta is rotate(s, X, theta).
DickeState rotate(const DickeState& state, const CollectiveOperators& ops,
                  Axis axis, double angle);
DickeState rotate(const DickeState& state, Axis axis, double angle);

// Coherent spin state with <Jx> = +N/2: rotate(|N/2>, y, pi/2).
DickeState css_max_jx(const CollectiveOperators& ops);
DickeState css_max_jx(int n_particles);

SpinMoments moments(const DickeState& state, const CollectiveOperators& ops);

// Husimi-Q, Q(theta,phi) = |<alpha(theta,phi)|Psi>|^2 with
// |alpha> = rotate(rotate(|N/2>, y, theta), z, phi).
std::vector<double> husimi_q(const DickeState& state,
                             const CollectiveOperators& ops,
                             const std::vector<BlochDirection>& grid);
std::vector<double> husimi_q(const DickeState& state,
                             const std::vector<BlochDirection>& grid);

// Uniform grid, theta midpoints of [0,pi] x phi left edges of [0,2pi);
// row-major in theta (phi fastest).
std::vector<BlochDirection> bloch_grid(int n_theta, int n_phi);

}  // namespace spinctl
