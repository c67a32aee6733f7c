#include "cws/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cws::signals {

namespace {

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

std::size_t sample_count(double seconds, int sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

}  // namespace

Waveform white_noise(double seconds, int sample_rate, int channels, double stddev,
                     std::uint64_t seed) {
  Waveform w(channels, sample_count(seconds, sample_rate), sample_rate);
  Gaussian g(seed);
  for (auto& ch : w.samples) {
    for (double& v : ch) v = static_cast<float>(stddev * g.next());
  }
  return w;
}

Waveform speech_like_noise(double seconds, int sample_rate, int channels, std::uint64_t seed) {
  Waveform w(channels, sample_count(seconds, sample_rate), sample_rate);
  Gaussian g(seed);
  const double pole = std::exp(-2.0 * std::numbers::pi * 800.0 / sample_rate);
  for (auto& ch : w.samples) {
    double state = 0.0;
    for (std::size_t n = 0; n < ch.size(); ++n) {
      state = pole * state + (1.0 - pole) * g.next();
      const double t = static_cast<double>(n) / sample_rate;
      const double envelope = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * 4.0 * t);
      ch[n] = static_cast<float>(0.8 * envelope * state);
    }
  }
  return w;
}

Waveform sine(double seconds, int sample_rate, int channels, double frequency_hz,
              double amplitude) {
  Waveform w(channels, sample_count(seconds, sample_rate), sample_rate);
  for (auto& ch : w.samples) {
    for (std::size_t n = 0; n < ch.size(); ++n) {
      ch[n] = amplitude * std::sin(2.0 * std::numbers::pi * frequency_hz * n / sample_rate);
    }
  }
  return w;
}

Waveform synthetic_music(double seconds, int sample_rate, std::uint64_t seed) {
  Waveform w(2, sample_count(seconds, sample_rate), sample_rate);
  Gaussian g(seed);
  constexpr double kPi = std::numbers::pi;
  const double beat = 0.5;
  // A minor / F / C / G roots, two beats each
  const double roots[] = {110.0, 87.31, 130.81, 98.0};
  const double lead[] = {440.0, 523.25, 587.33, 659.25, 587.33, 523.25, 493.88, 440.0};

  for (std::size_t n = 0; n < w.length(); ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    const int beat_index = static_cast<int>(t / beat);
    const double in_beat = t - beat_index * beat;
    const double root = roots[(beat_index / 2) % 4];

    const double bass_env = std::exp(-3.0 * in_beat);
    const double bass = 0.25 * bass_env * (std::sin(2 * kPi * root * t) + 0.3 * std::sin(4 * kPi * root * t));

    double chord = 0.0;
    for (double ratio : {2.0, 2.5198, 2.9966}) {
      for (int h = 1; h <= 4; ++h) chord += std::sin(2 * kPi * root * ratio * h * t) / (h * h);
    }
    chord *= 0.04;

    const double f0 = lead[beat_index % 8] * (1.0 + 0.004 * std::sin(2 * kPi * 5.5 * t));
    const double lead_env = std::min(1.0, in_beat * 40.0) * std::exp(-1.2 * in_beat);
    double voice = 0.0;
    for (int h = 1; h <= 6; ++h) voice += std::sin(2 * kPi * f0 * h * t) / h;
    voice *= 0.08 * lead_env;

    const double hat = (beat_index % 2 == 1 ? 0.06 : 0.03) * std::exp(-60.0 * in_beat) * g.next();
    const double kick = (beat_index % 2 == 0 ? 0.3 : 0.0) * std::exp(-25.0 * in_beat) *
                        std::sin(2 * kPi * (50.0 + 60.0 * std::exp(-40.0 * in_beat)) * in_beat);

    w.samples[0][n] = bass + 0.8 * chord + 1.1 * voice + hat + kick;
    w.samples[1][n] = bass + 1.2 * chord + 0.9 * voice + 0.7 * hat + kick;
  }
  return w;
}

}  // namespace cws::signals
