#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cws/wave_io.hpp"

namespace cws {

enum class Precision { f32, f64 };

// Uniform analysis/synthesis bank. analysis[j] and synthesis[j] hold the taps
// of band j. system_delay is the delay, in input samples, of the
// analysis -> synthesis cascade as implemented by analysis()/synthesis().
struct FilterBank {
  int num_bands = 4;
  int taps = 64;
  int system_delay = 1;
  std::vector<std::vector<double>> analysis;
  std::vector<std::vector<double>> synthesis;

  void validate() const;
};

// samples[c][j][k]: channel c, band j, decimated sample k.
struct SubbandSignal {
  std::vector<std::vector<std::vector<double>>> samples;
  int source_rate = 44100;

  std::size_t channels() const { return samples.size(); }
  std::size_t bands() const { return samples.empty() ? 0 : samples.front().size(); }
  std::size_t length() const {
    return samples.empty() || samples.front().empty() ? 0 : samples.front().front().size();
  }
  double band_rate() const { return static_cast<double>(source_rate) / static_cast<double>(bands()); }
};

class DesignError : public std::runtime_error {
 public:
  DesignError(const std::string& what, double objective)
      : std::runtime_error(what), objective_(objective) {}
  double objective() const { return objective_; }

 private:
  double objective_;
};

inline constexpr int kDefaultTaps = 64;
inline constexpr int kDefaultDesignIterations = 1000;
inline constexpr double kDefaultDesignStep = 0.01;
// Largest per-phase mean squared cascade error accepted after descent.
inline constexpr double kDesignObjectiveLimit = 1e-5;
inline constexpr double kSnrCapDb = 300.0;

// output[k] = x[k * factor], length ceil(len / factor).
std::vector<double> decimate(std::span<const double> x, int factor);
// output[k * factor] = x[k], zeros elsewhere, length len * factor.
std::vector<double> zero_insert(std::span<const double> x, int factor);

// Centered zero-padded convolution: y[k] = sum_m x[k - m + taps/2 - 1] * h[m],
// same length as x.
std::vector<double> conv_same(std::span<const double> x, std::span<const double> h);

// Cosine-modulated (pseudo-QMF) bank from a lowpass prototype.
FilterBank modulate_prototype(std::span<const double> prototype, int num_bands);

// Kaiser-windowed sinc, cutoff pi / (2 * num_bands), beta = 9.
std::vector<double> initial_prototype(int num_bands, int taps);

// Mean over the num_bands impulse phases of the squared error between the
// cascade impulse response and a delayed unit impulse.
double cascade_objective(const FilterBank& fb);

// Designs the prototype by gradient descent on cascade_objective, gradients by
// central differences. Throws std::invalid_argument on bad arguments and
// DesignError if the objective stays above kDesignObjectiveLimit.
FilterBank design_filterbank(int num_bands, int taps = kDefaultTaps,
                             int iterations = kDefaultDesignIterations,
                             double step = kDefaultDesignStep);

SubbandSignal analysis(const Waveform& x, const FilterBank& fb, Precision precision = Precision::f64);
Waveform synthesis(const SubbandSignal& sb, const FilterBank& fb, Precision precision = Precision::f64);

struct ReconstructionReport {
  double snr_db = 0.0;
  double max_abs_err = 0.0;
};

// Cascade error on probe, aligned by system_delay, taps samples trimmed at
// each edge. SNR is capped at kSnrCapDb.
ReconstructionReport measure_reconstruction(const FilterBank& fb, const Waveform& probe,
                                            Precision precision = Precision::f64);

std::string filterbank_to_json(const FilterBank& fb);
FilterBank filterbank_from_json(const std::string& text);
void save_filterbank(const FilterBank& fb, const std::filesystem::path& path);
FilterBank load_filterbank(const std::filesystem::path& path);

}  // namespace cws
