#include <cmath>

#include "cirm_fixtures.hpp"
#include "cws/cirm.hpp"
#include "doctest.h"

using namespace cws;
using testing::constant_output;
using testing::random_mix;
using testing::random_output;

namespace {

double max_spec_diff(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.real.size(); ++i)
    m = std::max({m, std::abs(a.real.data()[i] - b.real.data()[i]), std::abs(a.imag.data()[i] - b.imag.data()[i])});
  return m;
}

}  // namespace

TEST_CASE("sigmoid is stable at the extremes") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(-40.0) > 0.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}

TEST_CASE("identity mask reproduces the mixture") {
  const MagPhase mix = random_mix(257, 1);
  const ComplexSpectrogram s = apply_cirm(mix, constant_output(257, 40.0, 1.0, 0.0, 0.0));
  CHECK(max_spec_diff(s, from_magphase(mix)) <= 1e-6);
}

TEST_CASE("null mask yields silence") {
  const MagPhase mix = random_mix(257, 2);
  const ComplexSpectrogram s = apply_cirm(mix, constant_output(257, -40.0, 0.3, -0.8, 0.0));
  for (std::size_t i = 0; i < s.real.size(); ++i) {
    CHECK(std::abs(s.real.data()[i]) <= 1e-16);
    CHECK(std::abs(s.imag.data()[i]) <= 1e-16);
  }
}

TEST_CASE("hand-evaluated bins") {
  // |X| = 2, M = 0, Q = -3: relu(1 - 3) = 0 for any phase.
  const CirmBin clipped = cirm_bin(2.0, 0.6, 0.8, 0.0, -0.4, 0.9, -3.0);
  CHECK(clipped.magnitude == 0.0);
  CHECK(clipped.re() == 0.0);
  CHECK(clipped.im() == 0.0);

  // |X| = 1, angle 0, M = 0, Q = 0.5, P = (1/sqrt2, 1/sqrt2): mag 1, rotation pi/4.
  const CirmBin b = cirm_bin(1.0, 1.0, 0.0, 0.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.5);
  CHECK(b.magnitude == doctest::Approx(1.0));
  CHECK(b.re() == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(b.im() == doctest::Approx(0.7071).epsilon(1e-4));

  // Zero phase vector: eps keeps the division finite.
  const CirmBin z = cirm_bin(1.0, 1.0, 0.0, 40.0, 0.0, 0.0, 0.0);
  CHECK(std::isfinite(z.re()));
  CHECK(z.re() == 0.0);
}

TEST_CASE("output magnitude is non-negative and independent of the phase tensors") {
  const MagPhase mix = random_mix(257, 3);
  // |P| >= 0.5 keeps the eps term in r below 2e-8 relative.
  NetworkOutput a = testing::random_output_with_phase_radius(257, 4, 0.5, 2.0);
  NetworkOutput b = testing::random_output_with_phase_radius(257, 5, 0.5, 2.0);
  b.mask_logits = a.mask_logits;
  b.mag_residual = a.mag_residual;
  const ComplexSpectrogram sa = apply_cirm(mix, a), sb = apply_cirm(mix, b);
  for (std::size_t i = 0; i < sa.real.size(); ++i) {
    const double ma = std::hypot(sa.real.data()[i], sa.imag.data()[i]);
    const double mb = std::hypot(sb.real.data()[i], sb.imag.data()[i]);
    CHECK(ma >= 0.0);
    CHECK(std::abs(ma - mb) <= 1e-6);
  }
}

TEST_CASE("rotation is invariant to scaling the phase vector") {
  const MagPhase mix = random_mix(257, 6);
  // With alpha = 0.1 the scaled vector still has length >= 0.15, so eps / |P|^2 stays below 1e-6.
  const NetworkOutput base = testing::random_output_with_phase_radius(257, 7, 1.5, 3.0);
  const ComplexSpectrogram ref = apply_cirm(mix, base);
  for (double alpha : {0.1, 0.5, 2.0, 10.0}) {
    NetworkOutput scaled = base;
    for (auto& v : scaled.phase_real.data()) v *= alpha;
    for (auto& v : scaled.phase_imag.data()) v *= alpha;
    CHECK(max_spec_diff(apply_cirm(mix, scaled), ref) <= 1e-6);
  }
}

TEST_CASE("eps dominates for vanishing phase vectors") {
  // |rotation| = |P| / sqrt(|P|^2 + eps): a 1e-4 vector loses a third of the magnitude.
  const CirmBin b = cirm_bin(1.0, 1.0, 0.0, 40.0, 1e-4, 0.0, 0.0);
  CHECK(std::hypot(b.re(), b.im()) == doctest::Approx(1e-4 / std::sqrt(1e-8 + 1e-8)).epsilon(1e-9));
}

TEST_CASE("closed-form partials") {
  // dmag/dQ = 1 above the kink, dmag/dM = |X| s (1 - s) = 0.5 at M = 0, |X| = 2.
  MagPhase mix{RealTensor(1, 1, 1, 2.0), RealTensor(1, 1, 1, 1.0), RealTensor(1, 1, 1, 0.0), {}};
  const NetworkOutput out = constant_output(1, 0.0, 1.0, 0.0, 0.25);
  // Cotangent along the output direction picks out d|S|.
  const CirmBin b = cirm_bin(2.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.25);
  const RealTensor g_re(1, 1, 1, b.cos_out), g_im(1, 1, 1, b.sin_out);
  const CirmGradients g = cirm_gradients(mix, out, g_re, g_im);
  CHECK(g.mag_residual(0, 0, 0) == doctest::Approx(1.0));
  CHECK(g.mask_logits(0, 0, 0) == doctest::Approx(0.5));

  // Below the kink everything through the magnitude is zero.
  const CirmGradients dead = cirm_gradients(mix, constant_output(1, 0.0, 1.0, 0.0, -3.0), g_re, g_im);
  CHECK(dead.mag_residual(0, 0, 0) == 0.0);
  CHECK(dead.mask_logits(0, 0, 0) == 0.0);
  CHECK(dead.phase_real(0, 0, 0) == 0.0);
}

TEST_CASE("analytic gradients match central differences") {
  constexpr std::size_t bins = 64;
  constexpr double h = 1e-4;
  const MagPhase mix = random_mix(bins, 11);
  NetworkOutput out = random_output(bins, 12);
  // Move bins away from the relu kink.
  for (std::size_t k = 0; k < bins; ++k) {
    const double pre = mix.magnitude(0, 0, k) * sigmoid(out.mask_logits(0, 0, k)) + out.mag_residual(0, 0, k);
    if (std::abs(pre) <= 1e-3) out.mag_residual(0, 0, k) += 0.01;
  }
  const auto up_re_v = random_output(bins, 13).phase_real, up_im_v = random_output(bins, 14).phase_imag;
  const CirmGradients g = cirm_gradients(mix, out, up_re_v, up_im_v);

  auto objective = [&](const NetworkOutput& o, std::size_t k) {
    const CirmBin b = cirm_bin(mix.magnitude(0, 0, k), mix.phase_cos(0, 0, k), mix.phase_sin(0, 0, k),
                               o.mask_logits(0, 0, k), o.phase_real(0, 0, k), o.phase_imag(0, 0, k),
                               o.mag_residual(0, 0, k));
    return up_re_v(0, 0, k) * b.re() + up_im_v(0, 0, k) * b.im();
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    RealTensor NetworkOutput::*fields[4] = {&NetworkOutput::mask_logits, &NetworkOutput::phase_real,
                                            &NetworkOutput::phase_imag, &NetworkOutput::mag_residual};
    const RealTensor* analytic[4] = {&g.mask_logits, &g.phase_real, &g.phase_imag, &g.mag_residual};
    for (int q = 0; q < 4; ++q) {
      NetworkOutput plus = out, minus = out;
      (plus.*fields[q])(0, 0, k) += h;
      (minus.*fields[q])(0, 0, k) -= h;
      const double fd = (objective(plus, k) - objective(minus, k)) / (2.0 * h);
      const double a = (*analytic[q])(0, 0, k);
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-12});
      worst = std::max(worst, rel);
    }
  }
  MESSAGE("max relative error ", worst);
  CHECK(worst <= 1e-5);
}

TEST_CASE("shape and value checks") {
  const MagPhase mix = random_mix(8, 1);
  CHECK_THROWS_AS(apply_cirm(mix, random_output(9, 1)), std::invalid_argument);
  NetworkOutput bad = random_output(8, 1);
  bad.phase_real(0, 0, 3) = std::nan("");
  CHECK_THROWS_AS(apply_cirm(mix, bad), std::invalid_argument);
  CHECK_THROWS_AS(apply_cirm(mix, random_output(8, 1), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cirm_gradients(mix, random_output(8, 1), RealTensor(1, 1, 7), RealTensor(1, 1, 8)),
                  std::invalid_argument);
}
