#pragma once

#include <cstdint>

#include "cws/wave_io.hpp"

// Deterministic test and probe signals. Generators draw from std::mt19937_64,
// whose output sequence is fixed by the standard, and do their own
// distribution transforms so results match across standard libraries.
namespace cws::signals {

inline constexpr std::uint64_t kDefaultSeed = 20211101;

// Gaussian white noise with the given standard deviation. Samples are rounded
// to float so the probe is exactly representable in single precision.
Waveform white_noise(double seconds, int sample_rate, int channels, double stddev = 0.1,
                     std::uint64_t seed = kDefaultSeed);

// White noise through a one-pole lowpass with slow amplitude modulation.
Waveform speech_like_noise(double seconds, int sample_rate, int channels,
                           std::uint64_t seed = kDefaultSeed);

Waveform sine(double seconds, int sample_rate, int channels, double frequency_hz,
              double amplitude = 0.5);

// Stereo clip with a bass line, chord tones with harmonics, a lead voice with
// vibrato and noise-burst percussion. Used where a music-like probe is needed.
Waveform synthetic_music(double seconds, int sample_rate, std::uint64_t seed = kDefaultSeed);

}  // namespace cws::signals
