#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <unistd.h>

#include "cws/filterbank.hpp"
#include "cws/wave_io.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cws_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const cws::FilterBank& designed_bank(int bands) {
  static std::map<int, cws::FilterBank> cache;
  auto it = cache.find(bands);
  if (it == cache.end()) it = cache.emplace(bands, cws::design_filterbank(bands)).first;
  return it->second;
}

inline std::vector<double> uniform_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline cws::Waveform uniform_waveform(std::size_t channels, std::size_t length, int rate, std::uint64_t seed,
                                      double amplitude = 0.5) {
  cws::Waveform w(channels, length, rate);
  for (std::size_t c = 0; c < channels; ++c) w.samples[c] = uniform_vector(length, seed + c, -amplitude, amplitude);
  return w;
}

}  // namespace testing
