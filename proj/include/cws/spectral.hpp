#pragma once

#include <cstddef>
#include <vector>

#include "cws/filterbank.hpp"
#include "cws/tensor.hpp"

namespace cws {

struct StftConfig {
  int win_length = 512;
  int hop = 110;
  int fft_size = 512;

  int bins() const { return fft_size / 2 + 1; }
  void validate() const;
};

// One-sided STFT, [streams x frames x fft_size/2 + 1].
struct ComplexSpectrogram {
  RealTensor real;
  RealTensor imag;
  StftConfig config;

  void validate() const;
};

// Polar form with the phase kept as a unit (cos, sin) pair.
struct MagPhase {
  RealTensor magnitude;
  RealTensor phase_cos;
  RealTensor phase_sin;
  StftConfig config;
};

// Magnitudes at or below this get the phase (1, 0).
inline constexpr double kPhaseEpsilon = 1e-12;
// Floor for the summed squared window in the inverse transform.
inline constexpr double kWindowSumFloor = 1e-8;

// Periodic Hann window.
std::vector<double> hann_window(int length);

// Frames for a signal of this length: floor((len + 2 * (win/2) - win) / hop) + 1.
std::size_t frame_count(std::size_t signal_length, const StftConfig& config = {});

// Channel-major stream view of a subband signal: stream c * bands + j.
std::vector<std::vector<double>> stack_subbands(const SubbandSignal& sb);
SubbandSignal unstack_subbands(std::vector<std::vector<double>> streams, std::size_t channels, int source_rate);

// Frame t covers [t * hop, t * hop + win) of the signal zero-padded by win/2
// on both sides, Hann-windowed.
ComplexSpectrogram stft(const std::vector<std::vector<double>>& streams, const StftConfig& config = {});
ComplexSpectrogram stft(const SubbandSignal& sb, const StftConfig& config = {});

// Weighted overlap-add with the Hann synthesis window, normalised by the
// summed squared window.
std::vector<std::vector<double>> istft(const ComplexSpectrogram& spec, std::size_t out_length);

MagPhase to_magphase(const ComplexSpectrogram& spec);
ComplexSpectrogram from_magphase(const MagPhase& mp);

}  // namespace cws
