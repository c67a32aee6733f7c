#pragma once

#include "cws/spectral.hpp"
#include "cws/tensor.hpp"

namespace cws {

// Per-source network estimates, all the same shape as the mixture magnitude.
struct NetworkOutput {
  RealTensor mask_logits;   // M
  RealTensor phase_real;    // P_r
  RealTensor phase_imag;    // P_i
  RealTensor mag_residual;  // Q

  NetworkOutput() = default;
  NetworkOutput(std::size_t channels, std::size_t frames, std::size_t bins)
      : mask_logits(channels, frames, bins),
        phase_real(channels, frames, bins),
        phase_imag(channels, frames, bins),
        mag_residual(channels, frames, bins) {}

  // Throws std::invalid_argument on shape mismatch or non-finite values.
  void validate() const;
};

inline constexpr double kCirmEpsilon = 1e-8;

double sigmoid(double x);

// One time-frequency bin of the mask and rotation.
struct CirmBin {
  double magnitude;  // relu(|X| sigmoid(M) + Q)
  double cos_out;    // cos(angle X + theta)
  double sin_out;
  double re() const { return magnitude * cos_out; }
  double im() const { return magnitude * sin_out; }
};

CirmBin cirm_bin(double mix_mag, double mix_cos, double mix_sin, double mask_logit, double phase_real,
                 double phase_imag, double mag_residual, double eps = kCirmEpsilon);

// S = relu(|X| * sigmoid(M) + Q) * exp(j (angle X + theta)), with
// cos theta = P_r / r, sin theta = P_i / r, r = sqrt(P_r^2 + P_i^2 + eps).
// The angle sum uses the addition identities on the stored (cos, sin) pairs.
ComplexSpectrogram apply_cirm(const MagPhase& mix, const NetworkOutput& out, double eps = kCirmEpsilon);

struct CirmGradients {
  RealTensor mask_logits;
  RealTensor phase_real;
  RealTensor phase_imag;
  RealTensor mag_residual;
};

// Vector-Jacobian product of apply_cirm: given cotangents (g_re, g_im) of the
// output real/imag parts, returns d<g, S>/d{M, P_r, P_i, Q}. The relu
// subgradient at 0 is 0.
CirmGradients cirm_gradients(const MagPhase& mix, const NetworkOutput& out, const RealTensor& upstream_real,
                             const RealTensor& upstream_imag, double eps = kCirmEpsilon);

}  // namespace cws
