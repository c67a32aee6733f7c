#pragma once

#include <cmath>
#include <random>

#include "cws/cirm.hpp"

namespace testing {

// Random mixture bins with unit phase vectors, shape [1 x 1 x bins].
inline cws::MagPhase random_mix(std::size_t bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.1, 2.0), angle(-3.14159, 3.14159);
  cws::MagPhase mp{cws::RealTensor(1, 1, bins), cws::RealTensor(1, 1, bins), cws::RealTensor(1, 1, bins), {}};
  for (std::size_t k = 0; k < bins; ++k) {
    const double a = angle(rng);
    mp.magnitude(0, 0, k) = mag(rng);
    mp.phase_cos(0, 0, k) = std::cos(a);
    mp.phase_sin(0, 0, k) = std::sin(a);
  }
  return mp;
}

inline cws::NetworkOutput random_output(std::size_t bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logit(-3.0, 3.0), phase(-1.0, 1.0), residual(-0.5, 0.5);
  cws::NetworkOutput o(1, 1, bins);
  for (std::size_t k = 0; k < bins; ++k) {
    o.mask_logits(0, 0, k) = logit(rng);
    o.phase_real(0, 0, k) = phase(rng);
    o.phase_imag(0, 0, k) = phase(rng);
    o.mag_residual(0, 0, k) = residual(rng);
  }
  return o;
}

// Like random_output, but every phase vector has length in [r_min, r_max].
inline cws::NetworkOutput random_output_with_phase_radius(std::size_t bins, std::uint64_t seed, double r_min,
                                                          double r_max) {
  cws::NetworkOutput o = random_output(bins, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> radius(r_min, r_max), angle(-3.14159, 3.14159);
  for (std::size_t k = 0; k < bins; ++k) {
    const double r = radius(rng), a = angle(rng);
    o.phase_real(0, 0, k) = r * std::cos(a);
    o.phase_imag(0, 0, k) = r * std::sin(a);
  }
  return o;
}

inline cws::NetworkOutput constant_output(std::size_t bins, double m, double pr, double pi, double q) {
  cws::NetworkOutput o(1, 1, bins);
  for (std::size_t k = 0; k < bins; ++k) {
    o.mask_logits(0, 0, k) = m;
    o.phase_real(0, 0, k) = pr;
    o.phase_imag(0, 0, k) = pi;
    o.mag_residual(0, 0, k) = q;
  }
  return o;
}

}  // namespace testing
