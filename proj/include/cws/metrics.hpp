#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cws/wave_io.hpp"

namespace cws {

inline constexpr double kSdrCapDb = 300.0;
// Frames whose reference energy is below this are left out of the median.
inline constexpr double kSilentFrameEnergy = 1e-12;

// Mean absolute samplewise difference over all channels.
double l1_loss(const Waveform& a, const Waveform& b);

// l1_loss(mixture, sum of the four estimates).
double energy_conservation_loss(const Waveform& mixture, const std::vector<Waveform>& estimates);

// 10 log10(sum s^2 / sum (s - s_hat)^2) over all channels, capped at
// kSdrCapDb.
double sdr_global(const Waveform& reference, const Waveform& estimate);

struct FramewiseSdr {
  double median_db = 0.0;
  std::size_t frames_used = 0;
  std::size_t frames_total = 0;
};

// sdr_global on consecutive non-overlapping frames of frame_seconds (a
// trailing partial frame is ignored), silent-reference frames skipped,
// median of the rest (mean of the middle pair for an even count).
FramewiseSdr sdr_framewise(const Waveform& reference, const Waveform& estimate, double frame_seconds = 1.0);
double sdr_framewise_median(const Waveform& reference, const Waveform& estimate, double frame_seconds = 1.0);

struct MetricReport {
  std::string track;
  std::string source;
  double sdr_global_db = 0.0;
  double sdr_median_db = 0.0;
  std::size_t frames_used = 0;
};

MetricReport evaluate(const Waveform& reference, const Waveform& estimate, std::string track, std::string source);
std::string to_json(const MetricReport& report);

}  // namespace cws
