#include "cws/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cws/parallel.hpp"
#include "fft.hpp"

namespace cws {

void StftConfig::validate() const {
  if (win_length <= 0 || hop <= 0) throw std::invalid_argument("stft: window and hop must be positive");
  if (fft_size != win_length) throw std::invalid_argument("stft: fft_size must equal win_length");
  if (fft_size & (fft_size - 1)) throw std::invalid_argument("stft: fft_size must be a power of two");
}

void ComplexSpectrogram::validate() const {
  config.validate();
  if (!real.same_shape(imag)) throw std::invalid_argument("spectrogram: real/imag shape mismatch");
  if (real.bins() != static_cast<std::size_t>(config.bins())) {
    throw std::invalid_argument("spectrogram: bin count does not match fft size");
  }
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (!std::isfinite(real.data()[i]) || !std::isfinite(imag.data()[i])) {
      throw std::invalid_argument("spectrogram: non-finite entries");
    }
  }
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n) w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  return w;
}

std::size_t frame_count(std::size_t signal_length, const StftConfig& config) {
  const std::size_t pad = static_cast<std::size_t>(config.win_length / 2);
  const std::size_t padded = signal_length + 2 * pad;
  if (padded < static_cast<std::size_t>(config.win_length)) return 0;
  return (padded - config.win_length) / config.hop + 1;
}

std::vector<std::vector<double>> stack_subbands(const SubbandSignal& sb) {
  std::vector<std::vector<double>> streams;
  streams.reserve(sb.channels() * sb.bands());
  for (const auto& ch : sb.samples) {
    for (const auto& band : ch) streams.push_back(band);
  }
  return streams;
}

SubbandSignal unstack_subbands(std::vector<std::vector<double>> streams, std::size_t channels, int source_rate) {
  if (channels == 0 || streams.size() % channels != 0) {
    throw std::invalid_argument("unstack_subbands: stream count not divisible by channel count");
  }
  const std::size_t bands = streams.size() / channels;
  SubbandSignal sb;
  sb.source_rate = source_rate;
  sb.samples.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < bands; ++j) sb.samples[c].push_back(std::move(streams[c * bands + j]));
  }
  return sb;
}

ComplexSpectrogram stft(const std::vector<std::vector<double>>& streams, const StftConfig& config) {
  config.validate();
  if (streams.empty()) throw std::invalid_argument("stft: no input streams");
  const std::size_t len = streams.front().size();
  for (const auto& s : streams) {
    if (s.size() != len) throw std::invalid_argument("stft: streams differ in length");
  }
  if (len < static_cast<std::size_t>(config.win_length)) {
    throw std::invalid_argument("stft: signal length " + std::to_string(len) + " shorter than window " +
                                std::to_string(config.win_length));
  }
  const std::size_t frames = frame_count(len, config);
  const std::size_t bins = config.bins();
  const long pad = config.win_length / 2;
  const std::vector<double> window = hann_window(config.win_length);
  const detail::Fft fft(config.fft_size);

  ComplexSpectrogram spec{RealTensor(streams.size(), frames, bins), RealTensor(streams.size(), frames, bins),
                          config};
  parallel_for(streams.size(), [&](std::size_t c) {
    const auto& x = streams[c];
    std::vector<std::complex<double>> buf(config.fft_size);
    for (std::size_t t = 0; t < frames; ++t) {
      const long start = static_cast<long>(t) * config.hop - pad;
      for (long n = 0; n < config.win_length; ++n) {
        const long idx = start + n;
        const double v = idx >= 0 && idx < static_cast<long>(len) ? x[idx] : 0.0;
        buf[n] = {v * window[n], 0.0};
      }
      fft.forward(buf);
      double* re = spec.real.frame(c, t);
      double* im = spec.imag.frame(c, t);
      for (std::size_t k = 0; k < bins; ++k) {
        re[k] = buf[k].real();
        im[k] = buf[k].imag();
      }
    }
  });
  return spec;
}

ComplexSpectrogram stft(const SubbandSignal& sb, const StftConfig& config) {
  return stft(stack_subbands(sb), config);
}

std::vector<std::vector<double>> istft(const ComplexSpectrogram& spec, std::size_t out_length) {
  spec.validate();
  const StftConfig& config = spec.config;
  const std::size_t frames = spec.real.frames();
  const std::size_t bins = spec.real.bins();
  const long pad = config.win_length / 2;
  const long covered = frames == 0 ? 0 : static_cast<long>(frames - 1) * config.hop + config.win_length;
  if (pad + static_cast<long>(out_length) > covered) {
    throw std::invalid_argument("istft: " + std::to_string(frames) + " frames cannot cover " +
                                std::to_string(out_length) + " samples");
  }
  const std::vector<double> window = hann_window(config.win_length);
  const detail::Fft fft(config.fft_size);
  const std::size_t n_fft = config.fft_size;

  std::vector<double> norm(covered, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (long n = 0; n < config.win_length; ++n) norm[t * config.hop + n] += window[n] * window[n];
  }

  std::vector<std::vector<double>> out(spec.real.channels());
  parallel_for(out.size(), [&](std::size_t c) {
    std::vector<double> acc(covered, 0.0);
    std::vector<std::complex<double>> buf(n_fft);
    for (std::size_t t = 0; t < frames; ++t) {
      const double* re = spec.real.frame(c, t);
      const double* im = spec.imag.frame(c, t);
      buf[0] = {re[0], 0.0};
      for (std::size_t k = 1; k < bins; ++k) {
        buf[k] = {re[k], im[k]};
        if (k < n_fft - k) buf[n_fft - k] = {re[k], -im[k]};
      }
      buf[n_fft / 2] = {re[n_fft / 2], 0.0};
      fft.inverse(buf);
      for (long n = 0; n < config.win_length; ++n) {
        acc[t * config.hop + n] += window[n] * buf[n].real() / static_cast<double>(n_fft);
      }
    }
    auto& y = out[c];
    y.resize(out_length);
    for (std::size_t n = 0; n < out_length; ++n) {
      y[n] = acc[n + pad] / std::max(norm[n + pad], kWindowSumFloor);
    }
  });
  return out;
}

MagPhase to_magphase(const ComplexSpectrogram& spec) {
  const RealTensor& re = spec.real;
  const RealTensor& im = spec.imag;
  if (!re.same_shape(im)) throw std::invalid_argument("to_magphase: real/imag shape mismatch");
  MagPhase mp{RealTensor(re.channels(), re.frames(), re.bins()),
              RealTensor(re.channels(), re.frames(), re.bins(), 1.0),
              RealTensor(re.channels(), re.frames(), re.bins()), spec.config};
  for (std::size_t i = 0; i < re.size(); ++i) {
    const double r = re.data()[i];
    const double q = im.data()[i];
    const double mag = std::hypot(r, q);
    mp.magnitude.data()[i] = mag;
    if (mag > kPhaseEpsilon) {
      mp.phase_cos.data()[i] = r / mag;
      mp.phase_sin.data()[i] = q / mag;
    }
  }
  return mp;
}

ComplexSpectrogram from_magphase(const MagPhase& mp) {
  if (!mp.magnitude.same_shape(mp.phase_cos) || !mp.magnitude.same_shape(mp.phase_sin)) {
    throw std::invalid_argument("from_magphase: shape mismatch");
  }
  const RealTensor& mag = mp.magnitude;
  ComplexSpectrogram spec{RealTensor(mag.channels(), mag.frames(), mag.bins()),
                          RealTensor(mag.channels(), mag.frames(), mag.bins()), mp.config};
  for (std::size_t i = 0; i < mag.size(); ++i) {
    spec.real.data()[i] = mag.data()[i] * mp.phase_cos.data()[i];
    spec.imag.data()[i] = mag.data()[i] * mp.phase_sin.data()[i];
  }
  return spec;
}

}  // namespace cws
