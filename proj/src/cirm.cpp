#include "cws/cirm.hpp"

#include <cmath>
#include <stdexcept>

namespace cws {

namespace {

void check_shapes(const MagPhase& mix, const NetworkOutput& out) {
  out.validate();
  const RealTensor& ref = mix.magnitude;
  if (!ref.same_shape(mix.phase_cos) || !ref.same_shape(mix.phase_sin) || !ref.same_shape(out.mask_logits)) {
    throw std::invalid_argument("cirm: mixture and network output shapes differ");
  }
}

}  // namespace

void NetworkOutput::validate() const {
  if (!mask_logits.same_shape(phase_real) || !mask_logits.same_shape(phase_imag) ||
      !mask_logits.same_shape(mag_residual)) {
    throw std::invalid_argument("network output tensors differ in shape");
  }
  for (const RealTensor* t : {&mask_logits, &phase_real, &phase_imag, &mag_residual}) {
    for (double v : t->data()) {
      if (!std::isfinite(v)) throw std::invalid_argument("network output has non-finite entries");
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

CirmBin cirm_bin(double mix_mag, double mix_cos, double mix_sin, double mask_logit, double phase_real,
                 double phase_imag, double mag_residual, double eps) {
  const double r = std::sqrt(phase_real * phase_real + phase_imag * phase_imag + eps);
  const double cos_t = phase_real / r;
  const double sin_t = phase_imag / r;
  const double pre = mix_mag * sigmoid(mask_logit) + mag_residual;
  return {pre > 0.0 ? pre : 0.0, mix_cos * cos_t - mix_sin * sin_t, mix_sin * cos_t + mix_cos * sin_t};
}

ComplexSpectrogram apply_cirm(const MagPhase& mix, const NetworkOutput& out, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("cirm: eps must be positive");
  check_shapes(mix, out);
  const RealTensor& mag = mix.magnitude;
  ComplexSpectrogram spec{RealTensor(mag.channels(), mag.frames(), mag.bins()),
                          RealTensor(mag.channels(), mag.frames(), mag.bins()), mix.config};
  for (std::size_t i = 0; i < mag.size(); ++i) {
    const CirmBin b = cirm_bin(mag.data()[i], mix.phase_cos.data()[i], mix.phase_sin.data()[i],
                               out.mask_logits.data()[i], out.phase_real.data()[i], out.phase_imag.data()[i],
                               out.mag_residual.data()[i], eps);
    spec.real.data()[i] = b.re();
    spec.imag.data()[i] = b.im();
  }
  return spec;
}

CirmGradients cirm_gradients(const MagPhase& mix, const NetworkOutput& out, const RealTensor& upstream_real,
                             const RealTensor& upstream_imag, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("cirm: eps must be positive");
  check_shapes(mix, out);
  const RealTensor& mag = mix.magnitude;
  if (!mag.same_shape(upstream_real) || !mag.same_shape(upstream_imag)) {
    throw std::invalid_argument("cirm: upstream cotangent shape differs");
  }
  const std::size_t c = mag.channels(), t = mag.frames(), f = mag.bins();
  CirmGradients g{RealTensor(c, t, f), RealTensor(c, t, f), RealTensor(c, t, f), RealTensor(c, t, f)};

  for (std::size_t i = 0; i < mag.size(); ++i) {
    const double x = mag.data()[i];
    const double cx = mix.phase_cos.data()[i];
    const double sx = mix.phase_sin.data()[i];
    const double m = out.mask_logits.data()[i];
    const double pr = out.phase_real.data()[i];
    const double pi = out.phase_imag.data()[i];
    const double q = out.mag_residual.data()[i];
    const double g_re = upstream_real.data()[i];
    const double g_im = upstream_imag.data()[i];

    const double r2 = pr * pr + pi * pi + eps;
    const double r = std::sqrt(r2);
    const double r3 = r2 * r;
    const double cos_t = pr / r;
    const double sin_t = pi / r;
    const double cos_out = cx * cos_t - sx * sin_t;
    const double sin_out = sx * cos_t + cx * sin_t;
    const double s = sigmoid(m);
    const double pre = x * s + q;
    const double active = pre > 0.0 ? 1.0 : 0.0;
    const double out_mag = pre > 0.0 ? pre : 0.0;

    // through the magnitude
    const double g_mag = g_re * cos_out + g_im * sin_out;
    g.mask_logits.data()[i] = g_mag * active * x * s * (1.0 - s);
    g.mag_residual.data()[i] = g_mag * active;

    // through the rotation
    const double g_cos_t = out_mag * (g_re * cx + g_im * sx);
    const double g_sin_t = out_mag * (-g_re * sx + g_im * cx);
    const double dcos_dpr = (pi * pi + eps) / r3;
    const double dcos_dpi = -pr * pi / r3;
    const double dsin_dpr = -pr * pi / r3;
    const double dsin_dpi = (pr * pr + eps) / r3;
    g.phase_real.data()[i] = g_cos_t * dcos_dpr + g_sin_t * dsin_dpr;
    g.phase_imag.data()[i] = g_cos_t * dcos_dpi + g_sin_t * dsin_dpi;
  }
  return g;
}

}  // namespace cws
