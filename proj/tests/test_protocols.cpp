#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spinctl/protocols.hpp"

using namespace spinctl;
using doctest::Approx;

TEST_CASE("run_oat: benchmark working point reaches 7.8 N") {
  const ModelParams params{100, 0.1, 0.0};
  const SchemeReport report = run_oat(params, {0.48, 1.35});
  CHECK(report.fq_final == Approx(780.0).epsilon(0.03));
  CHECK(report.fq_final == report.trajectory.fq.back());
  CHECK(report.profile.pulses.size() == 1);
}

TEST_CASE("run_oat: zero pulse leaves the shot-noise limit") {
  const ModelParams params{100, 0.1, 0.0};
  const SchemeReport report = run_oat(params, {0.48, 0.0});
  CHECK(report.fq_final == Approx(100.0).epsilon(1e-9));
}

TEST_CASE("run_oat: late pulse contributes nothing beyond the free accrual") {
  const ModelParams params{100, 0.1, 0.0};
  const OatScheme late{0.999, 1.35};
  const SchemeReport report = run_oat(params, late, nullptr, 2);

  // identical physics through evolve_profile directly
  ControlProfile manual = ControlProfile::constant(0.0, 1);
  manual.pulses.push_back({late.tau_prep, late.theta0});
  const Trajectory traj = evolve_profile(css_max_jx(100), params, manual, 2);
  CHECK(report.fq_final == Approx(traj.fq.back()).epsilon(1e-12));
  CHECK(report.fq_final == Approx(100.0).epsilon(0.02));

  // f0 does jump at the pulse, fq barely moves
  CHECK(traj.f0.back() > 150.0);

  CHECK_THROWS_AS(run_oat(params, {1.0, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(run_oat(params, {0.0, 0.3}), std::invalid_argument);
}

TEST_CASE("optimize_oat: recovers the benchmark optimum at N=100, chiT=0.1") {
  const ModelParams params{100, 0.1, 0.0};
  const auto [scheme, report] = optimize_oat(params);
  CHECK(report.fq_final == Approx(780.0).epsilon(0.03));
  CHECK(std::abs(scheme.tau_prep - 0.48) < 0.03);
  CHECK(std::abs(std::abs(scheme.theta0) - 1.35) < 0.1);
}

TEST_CASE("optimize_oat: flat objective at chiT = 0") {
  const ModelParams params{40, 0.0, 0.0};
  const auto [scheme, report] = optimize_oat(params, {12, 12, 1e-3});
  CHECK(report.fq_final == Approx(40.0).epsilon(1e-9));
}

TEST_CASE("optimize_oat: never below the shot-noise limit") {
  const ModelParams params{30, 0.25, 0.0};
  const auto [scheme, report] = optimize_oat(params, {16, 16, 1e-3});
  CHECK(report.fq_final >= 30.0 - 1e-6);
}

TEST_CASE("optimize_oat: matches a brute-force fine grid at N=4") {
  const ModelParams params{4, 0.1, 0.0};
  const auto [scheme, report] = optimize_oat(params, {30, 30, 1e-5});

  double brute = 0.0;
  for (int a = 1; a < 120; ++a) {
    for (int b = 0; b < 120; ++b) {
      const OatScheme cand{a / 120.0, -M_PI + (b + 0.5) * 2.0 * M_PI / 120.0};
      const SchemeReport r = run_oat(params, cand, nullptr, 2);
      brute = std::max(brute, r.fq_final);
    }
  }
  CHECK(report.fq_final >= brute - 1e-6);
}

TEST_CASE("run_tnt: fixed Lambda = 1 profile") {
  const ModelParams params{100, 0.1, 0.0};
  const SchemeReport report = run_tnt(params);
  CHECK(report.profile.segments.size() == 20);
  for (double v : report.profile.segments) CHECK(v == 1.0);
  CHECK(report.fq_final == report.trajectory.fq.back());

  const ModelParams no_twist{50, 0.0, 0.0};
  CHECK(run_tnt(no_twist).fq_final == Approx(50.0).epsilon(1e-9));
}

TEST_CASE("run_tnt: N=2 against direct segment evolution") {
  const ModelParams params{2, 0.4, 0.0};
  const SchemeReport report = run_tnt(params, nullptr, 2, 1);
  const DickeState css = css_max_jx(2);
  const auto [state, deriv] =
      evolve_segment(css, CVector::Zero(3), params, 1.0, 1.0);
  CHECK(report.fq_final == Approx(qfi_of(state, deriv)).epsilon(1e-12));
}

TEST_CASE("run_profile: noise model adds an fc_final") {
  const ModelParams params{40, 0.1, 0.0};
  const auto noise = build_noise_kernel(40, 3.0);
  const SchemeReport report =
      run_profile(params, ControlProfile::constant(0.0, 2), &noise, 11);
  REQUIRE(report.fc_final.has_value());
  REQUIRE(report.phase_offset.has_value());
  CHECK(*report.fc_final > 0.0);
  CHECK(*report.fc_final <= report.fq_final * (1 + 1e-6));
}

TEST_CASE("reference_lines") {
  CHECK(reference_lines({100, 0.1, 0}).snl_fq == 100.0);
  CHECK(reference_lines({100, 0.1, 0}).heisenberg_f0 == 10000.0);
  CHECK(reference_lines({1, 0.0, 0}).snl_fq == 1.0);
  CHECK(reference_lines({1, 0.0, 0}).heisenberg_f0 == 1.0);
  CHECK(reference_lines({2, 0.5, 0}).snl_fq == 2.0);
  CHECK(reference_lines({2, 0.5, 0}).heisenberg_f0 == 4.0);
}
