#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "spinctl/dynamics.hpp"
#include "spinctl/measurement.hpp"

using namespace spinctl;
using doctest::Approx;

namespace {

// CSS with the derivative state of a pure Ramsey interrogation over the full
// window: |dPsi> = -i Jz |Psi>.
std::pair<DickeState, CVector> ramsey_css(int n) {
  DickeState css = css_max_jx(n);
  CVector deriv(n + 1);
  for (int k = 0; k <= n; ++k) {
    deriv[k] = Complex(0, -(k - 0.5 * n)) * css.amplitudes[k];
  }
  return {css, deriv};
}

}  // namespace

TEST_CASE("jx_distribution: max-Jx CSS lands on m = +N/2") {
  const int n = 60;
  const DickeState css = css_max_jx(n);
  const auto dist = jx_distribution(css, CVector::Zero(n + 1), 0.0);
  CHECK(dist.probs[n] == Approx(1.0).epsilon(1e-10));
  CHECK(dist.probs.head(n).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(dist.dprobs.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jx_distribution: normalization and zero-sum derivative") {
  const ModelParams params{30, 0.2, 0.0};
  ControlProfile profile = ControlProfile::constant(0.4, 4);
  profile.pulses.push_back({0.5, 1.1});
  const Trajectory traj = evolve_profile(css_max_jx(30), params, profile, 2);
  for (double phi : {0.0, 0.3, -1.2}) {
    const auto dist = jx_distribution(traj.states.back(),
                                      traj.deriv_states.back(), phi);
    CHECK(dist.probs.minCoeff() >= 0.0);
    CHECK(dist.probs.sum() == Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(dist.dprobs.sum()) < 1e-9);
  }
}

TEST_CASE("jx_distribution: derivative matches finite differences in omega") {
  const int n = 2;
  const ControlProfile profile = ControlProfile::constant(0.9, 3);
  const DickeState css = css_max_jx(n);
  const double phi = 0.37;

  ModelParams params{n, 0.4, 0.0};
  const Trajectory traj = evolve_profile(css, params, profile, 2);
  const auto dist =
      jx_distribution(traj.states.back(), traj.deriv_states.back(), phi);

  const double eps = 1e-6;
  ModelParams plus = params, minus = params;
  plus.omega_T += eps;
  minus.omega_T -= eps;
  const auto tp = evolve_profile(css, plus, profile, 2);
  const auto tm = evolve_profile(css, minus, profile, 2);
  const CVector zero = CVector::Zero(n + 1);
  const auto dp = jx_distribution(tp.states.back(), zero, phi);
  const auto dm = jx_distribution(tm.states.back(), zero, phi);
  for (int k = 0; k <= n; ++k) {
    const double fd = (dp.probs[k] - dm.probs[k]) / (2 * eps);
    CHECK(dist.dprobs[k] == Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("build_noise_kernel: limits and normalization") {
  const auto identity = build_noise_kernel(20, 0.0);
  CHECK(identity.kernel.isIdentity(0.0));

  const auto flat = build_noise_kernel(20, 1e6);
  for (int c = 0; c < 21; ++c) {
    for (int r = 0; r < 21; ++r) {
      CHECK(flat.kernel(r, c) == Approx(1.0 / 21).epsilon(1e-6));
    }
  }

  const auto gauss = build_noise_kernel(100, 10.0);
  for (int c = 0; c < 101; ++c) {
    CHECK(std::abs(gauss.kernel.col(c).sum() - 1.0) < 1e-12);
    CHECK(gauss.kernel.col(c).minCoeff() >= 0.0);
  }

  CHECK_THROWS_AS(build_noise_kernel(10, -1.0), std::invalid_argument);
}

TEST_CASE("apply_noise: definition and linearity") {
  const int n = 40;
  const auto noise = build_noise_kernel(n, 10.0);

  MeasurementDistribution delta;
  delta.probs = Eigen::VectorXd::Zero(n + 1);
  delta.probs[n / 2] = 1.0;
  delta.dprobs = Eigen::VectorXd::Zero(n + 1);
  const auto blurred = apply_noise(delta, noise);
  CHECK((blurred.probs - noise.kernel.col(n / 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(blurred.probs.sum() == Approx(1.0).epsilon(1e-9));

  const auto identity = build_noise_kernel(n, 0.0);
  const auto same = apply_noise(delta, identity);
  CHECK((same.probs - delta.probs).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MeasurementDistribution p1, p2;
  p1.probs.resize(n + 1);
  p1.dprobs.resize(n + 1);
  p2.probs.resize(n + 1);
  p2.dprobs.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    p1.probs[k] = u(rng);
    p1.dprobs[k] = u(rng) - 0.5;
    p2.probs[k] = u(rng);
    p2.dprobs[k] = u(rng) - 0.5;
  }
  const double a = 0.3, b = 0.7;
  MeasurementDistribution combo;
  combo.probs = a * p1.probs + b * p2.probs;
  combo.dprobs = a * p1.dprobs + b * p2.dprobs;
  const auto lhs = apply_noise(combo, noise);
  const auto r1 = apply_noise(p1, noise);
  const auto r2 = apply_noise(p2, noise);
  CHECK((lhs.probs - a * r1.probs - b * r2.probs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((lhs.dprobs - a * r1.dprobs - b * r2.dprobs).cwiseAbs().maxCoeff() < 1e-12);

  MeasurementDistribution wrong;
  wrong.probs = Eigen::VectorXd::Zero(5);
  wrong.dprobs = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(apply_noise(wrong, noise), std::invalid_argument);
}

TEST_CASE("classical_fisher: closed forms") {
  MeasurementDistribution flat;
  flat.probs = Eigen::VectorXd::Constant(9, 1.0 / 9);
  flat.dprobs = Eigen::VectorXd::Zero(9);
  CHECK(classical_fisher(flat) == 0.0);

  MeasurementDistribution two;
  const double p = 0.3, d = 0.2;
  two.probs = Eigen::VectorXd(2);
  two.probs << p, 1 - p;
  two.dprobs = Eigen::VectorXd(2);
  two.dprobs << d, -d;
  CHECK(classical_fisher(two) == Approx(d * d / p + d * d / (1 - p)).epsilon(1e-15));
}

TEST_CASE("classical_fisher never exceeds the quantum Fisher information") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const int n = 16;
  const JxMeasurement meas(build_operators(n));
  for (int trial = 0; trial < 6; ++trial) {
    ControlProfile profile;
    profile.segments = {u(rng), u(rng), u(rng)};
    const ModelParams params{n, 0.2, 0.0};
    const Trajectory traj = evolve_profile(css_max_jx(n), params, profile, 2);
    const double fq = traj.fq.back();
    for (double sigma : {0.0, 1.0, 5.0}) {
      const auto noise = build_noise_kernel(n, sigma);
      for (double phi : {0.0, 0.9, -2.2}) {
        const double fc = meas.fisher_at(traj.states.back().amplitudes,
                                         traj.deriv_states.back(), noise, phi);
        CHECK(fc <= fq * (1.0 + 1e-6) + 1e-12);
      }
    }
  }
}

TEST_CASE("optimize_phase_offset: CSS saturates the shot-noise limit at sigma=0") {
  const auto [css, deriv] = ramsey_css(100);
  const auto opt =
      optimize_phase_offset(css, deriv, build_noise_kernel(100, 0.0));
  CHECK(opt.fc == Approx(100.0).epsilon(0.01));
}

TEST_CASE("optimize_phase_offset: CSS at sigma = sqrt(N) gives about 0.2 N") {
  const auto [css, deriv] = ramsey_css(100);
  const auto opt =
      optimize_phase_offset(css, deriv, build_noise_kernel(100, 10.0));
  CHECK(opt.fc == Approx(20.0).epsilon(0.25));
}

TEST_CASE("optimize_phase_offset: refinement never loses to the grid scan") {
  const ModelParams params{24, 0.3, 0.0};
  ControlProfile profile = ControlProfile::constant(-1.0, 5);
  const Trajectory traj = evolve_profile(css_max_jx(24), params, profile, 2);
  const JxMeasurement meas(build_operators(24));
  const auto noise = build_noise_kernel(24, 2.0);

  const int n_grid = 256;
  double grid_best = 0.0;
  for (int g = 0; g < n_grid; ++g) {
    const double phi = -M_PI + 2.0 * M_PI * g / n_grid;
    grid_best = std::max(grid_best,
                         meas.fisher_at(traj.states.back().amplitudes,
                                        traj.deriv_states.back(), noise, phi));
  }
  const auto opt = meas.optimize_phase(traj.states.back().amplitudes,
                                       traj.deriv_states.back(), noise, n_grid);
  CHECK(opt.fc >= grid_best - 1e-12);
  CHECK(opt.phi >= -M_PI);
  CHECK(opt.phi < M_PI);
  // the reported phi reproduces the reported value
  CHECK(meas.fisher_at(traj.states.back().amplitudes, traj.deriv_states.back(),
                       noise, opt.phi) == Approx(opt.fc).epsilon(1e-12));
}
