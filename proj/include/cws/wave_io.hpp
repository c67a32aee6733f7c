#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cws {

// Multichannel time-domain signal. samples[c][n], all channels equal length.
struct Waveform {
  std::vector<std::vector<double>> samples;
  int sample_rate = 44100;

  Waveform() = default;
  Waveform(std::size_t channels, std::size_t length, int rate)
      : samples(channels, std::vector<double>(length, 0.0)), sample_rate(rate) {}

  std::size_t channels() const { return samples.size(); }
  std::size_t length() const { return samples.empty() ? 0 : samples.front().size(); }

  // Throws std::invalid_argument if any invariant is violated.
  void validate() const;
};

enum class WavFormat { pcm16, float32 };

enum class WavErrorCode {
  io,
  not_riff,
  malformed_header,
  unsupported_codec,
  truncated_data,
  invalid_samples,
};

class WavError : public std::runtime_error {
 public:
  WavError(WavErrorCode code, const std::string& what);
  WavErrorCode code() const { return code_; }

 private:
  WavErrorCode code_;
};

const char* to_string(WavErrorCode code);

// Reads RIFF/WAVE PCM16, PCM24 or IEEE float32, mono or stereo. Integer
// samples are divided by 2^(bits-1). Unknown chunks are skipped.
Waveform read_wav(const std::filesystem::path& path);

// pcm16 uses round-half-away-from-zero and clamps to [-1, 1 - 2^-15].
void write_wav(const Waveform& w, const std::filesystem::path& path, WavFormat format);

}  // namespace cws
