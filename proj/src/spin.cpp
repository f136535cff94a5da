#include "spinctl/spin.hpp"

#include <cmath>
#include <stdexcept>

namespace spinctl {

namespace {

constexpr Complex kI{0.0, 1.0};

// <m+1| J+ |m> for the chain m = -j ... j-1. The squares j(j+1) - m(m+1)
// are exact dyadic rationals; each stored root is picked within one or two
// ulps of sqrt so that consecutive squared-value rounding errors track each
// other. The commutator [Jx, Jy] - i Jz telescopes those errors, and this
// choice keeps its max-norm residual below 1e-12 up to N = 200.
std::vector<double> ladder_elements(int n_particles) {
  const double j = 0.5 * n_particles;
  std::vector<double> ladder(n_particles);
  double prev_err = 0.0;
  for (int k = 0; k < n_particles; ++k) {
    const double m = k - j;
    const double x = j * (j + 1.0) - m * (m + 1.0);
    const double base = std::sqrt(x);
    const double lo = std::nextafter(base, 0.0);
    const double hi = std::nextafter(base, 2.0 * base);
    const double candidates[5] = {base, lo, hi, std::nextafter(lo, 0.0),
                                  std::nextafter(hi, 2.0 * base)};
    double best = base;
    double best_err = std::fma(base, base, -x);
    for (double c : candidates) {
      const double err = std::fma(c, c, -x);
      if (std::abs(err - prev_err) < std::abs(best_err - prev_err)) {
        best = c;
        best_err = err;
      }
    }
    ladder[k] = best;
    prev_err = best_err;
  }
  return ladder;
}

void check_state(const DickeState& state) {
  if (state.n_particles < 1) {
    throw std::invalid_argument("DickeState: n_particles must be >= 1");
  }
  if (state.amplitudes.size() != state.n_particles + 1) {
    throw std::invalid_argument("DickeState: amplitude vector must have length N+1");
  }
}

// Applies diag(exp(-i angle m_k)) in place.
void apply_z_phases(CVector& v, double j, double angle) {
  const int n = static_cast<int>(v.size());
  for (int k = 0; k < n; ++k) {
    v[k] *= std::exp(-kI * angle * (k - j));
  }
}

// exp(-i angle Jx) via the cached eigendecomposition.
void apply_x_rotation(CVector& v, const CollectiveOperators& ops, double angle) {
  const auto& V = ops.jx_eigvecs;
  CVector w(v.size());
  w.real() = V.transpose() * v.real();
  w.imag() = V.transpose() * v.imag();
  for (int k = 0; k < w.size(); ++k) {
    w[k] *= std::exp(-kI * angle * ops.jx_eigvals[k]);
  }
  v.real() = V * w.real();
  v.imag() = V * w.imag();
}

}  // namespace

CollectiveOperators build_operators(int n_particles) {
  if (n_particles < 1) {
    throw std::invalid_argument("build_operators: n_particles must be >= 1");
  }
  const int dim = n_particles + 1;
  const double j = 0.5 * n_particles;

  CollectiveOperators ops;
  ops.n_particles = n_particles;
  ops.jx = Eigen::MatrixXd::Zero(dim, dim);
  ops.jy = Eigen::MatrixXcd::Zero(dim, dim);
  ops.jz = Eigen::MatrixXd::Zero(dim, dim);

  const std::vector<double> ladder = ladder_elements(n_particles);
  for (int k = 0; k < dim; ++k) {
    ops.jz(k, k) = k - j;
    if (k + 1 < dim) {
      const double l = ladder[k];
      ops.jx(k + 1, k) = 0.5 * l;
      ops.jx(k, k + 1) = 0.5 * l;
      // Jy = (J+ - J-) / 2i
      ops.jy(k + 1, k) = -0.5 * kI * l;
      ops.jy(k, k + 1) = 0.5 * kI * l;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ops.jx);
  ops.jx_eigvecs = es.eigenvectors();
  ops.jx_eigvals = es.eigenvalues();
  return ops;
}

DickeState jz_eigenstate(int n_particles, double m) {
  if (n_particles < 1) {
    throw std::invalid_argument("jz_eigenstate: n_particles must be >= 1");
  }
  const double j = 0.5 * n_particles;
  const double k_real = m + j;
  const int k = static_cast<int>(std::lround(k_real));
  if (std::abs(k_real - k) > 1e-9 || k < 0 || k > n_particles) {
    throw std::invalid_argument("jz_eigenstate: m must be one of -N/2 ... N/2");
  }
  DickeState state;
  state.n_particles = n_particles;
  state.amplitudes = CVector::Zero(n_particles + 1);
  state.amplitudes[k] = 1.0;
  return state;
}

DickeState rotate(const DickeState& state, const CollectiveOperators& ops,
                  Axis axis, double angle) {
  check_state(state);
  if (ops.n_particles != state.n_particles) {
    throw std::invalid_argument("rotate: operator table does not match state size");
  }
  const double j = state.spin();
  DickeState out = state;
  switch (axis) {
    case Axis::Z:
      apply_z_phases(out.amplitudes, j, angle);
      break;
    case Axis::X:
      apply_x_rotation(out.amplitudes, ops, angle);
      break;
    case Axis::Y:
      // exp(-i t Jy) = exp(-i pi/2 Jz) exp(-i t Jx) exp(+i pi/2 Jz)
      apply_z_phases(out.amplitudes, j, -0.5 * M_PI);
      apply_x_rotation(out.amplitudes, ops, angle);
      apply_z_phases(out.amplitudes, j, 0.5 * M_PI);
      break;
  }
  return out;
}

DickeState rotate(const DickeState& state, Axis axis, double angle) {
  if (axis == Axis::Z) {
    DickeState out = state;
    check_state(out);
    apply_z_phases(out.amplitudes, state.spin(), angle);
    return out;
  }
  return rotate(state, build_operators(state.n_particles), axis, angle);
}

DickeState css_max_jx(const CollectiveOperators& ops) {
  return rotate(jz_eigenstate(ops.n_particles, ops.spin()), ops, Axis::Y, 0.5 * M_PI);
}

DickeState css_max_jx(int n_particles) {
  return css_max_jx(build_operators(n_particles));
}

SpinMoments moments(const DickeState& state, const CollectiveOperators& ops) {
  check_state(state);
  const CVector& c = state.amplitudes;
  const double j = state.spin();

  SpinMoments mom;
  // Jz is diagonal
  double ez = 0, ez2 = 0;
  for (int k = 0; k < c.size(); ++k) {
    const double m = k - j;
    const double p = std::norm(c[k]);
    ez += m * p;
    ez2 += m * m * p;
  }
  mom.mean_z = ez;
  mom.var_z = std::max(0.0, ez2 - ez * ez);

  CVector jx_c(c.size()), jy_c(c.size());
  jx_c.real() = ops.jx * c.real();
  jx_c.imag() = ops.jx * c.imag();
  jy_c = ops.jy * c;

  mom.mean_x = c.dot(jx_c).real();
  mom.mean_y = c.dot(jy_c).real();
  mom.var_x = std::max(0.0, jx_c.squaredNorm() - mom.mean_x * mom.mean_x);
  mom.var_y = std::max(0.0, jy_c.squaredNorm() - mom.mean_y * mom.mean_y);
  return mom;
}

std::vector<double> husimi_q(const DickeState& state,
                             const CollectiveOperators& ops,
                             const std::vector<BlochDirection>& grid) {
  check_state(state);
  const double j = state.spin();
  const DickeState seed = jz_eigenstate(state.n_particles, j);

  std::vector<double> q(grid.size());
  // Group by theta: one y-rotation per distinct theta, phi handled as phases
  // inside the overlap sum.
  size_t i = 0;
  while (i < grid.size()) {
    const double theta = grid[i].theta;
    const DickeState beta = rotate(seed, ops, Axis::Y, theta);
    size_t r = i;
    for (; r < grid.size() && grid[r].theta == theta; ++r) {
      const double phi = grid[r].phi;
      // <alpha|Psi> = sum_k conj(beta_k) e^{+i phi m_k} Psi_k
      Complex overlap{0.0, 0.0};
      for (int k = 0; k < beta.amplitudes.size(); ++k) {
        overlap += std::conj(beta.amplitudes[k]) *
                   std::exp(kI * phi * (k - j)) * state.amplitudes[k];
      }
      q[r] = std::norm(overlap);
    }
    i = r;
  }
  return q;
}

std::vector<double> husimi_q(const DickeState& state,
                             const std::vector<BlochDirection>& grid) {
  return husimi_q(state, build_operators(state.n_particles), grid);
}

std::vector<BlochDirection> bloch_grid(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) {
    throw std::invalid_argument("bloch_grid: grid sizes must be >= 1");
  }
  std::vector<BlochDirection> grid;
  grid.reserve(static_cast<size_t>(n_theta) * n_phi);
  for (int a = 0; a < n_theta; ++a) {
    const double theta = (a + 0.5) * M_PI / n_theta;
    for (int b = 0; b < n_phi; ++b) {
      grid.push_back({theta, b * 2.0 * M_PI / n_phi});
    }
  }
  return grid;
}

}  // namespace spinctl
