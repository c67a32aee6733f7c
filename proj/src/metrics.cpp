#include "cws/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace cws {

namespace {

void require_same_shape(const Waveform& a, const Waveform& b, const char* what) {
  if (a.channels() != b.channels() || a.length() != b.length())
    throw std::invalid_argument(std::string(what) + ": shapes differ (" + std::to_string(a.channels()) + "x" +
                                std::to_string(a.length()) + " vs " + std::to_string(b.channels()) + "x" +
                                std::to_string(b.length()) + ")");
}

struct Energies {
  double signal = 0.0;
  double error = 0.0;
};

Energies energies(const Waveform& reference, const Waveform& estimate, std::size_t begin, std::size_t end) {
  Energies e;
  for (std::size_t c = 0; c < reference.channels(); ++c) {
    const auto& s = reference.samples[c];
    const auto& s_hat = estimate.samples[c];
    for (std::size_t n = begin; n < end; ++n) {
      const double d = s[n] - s_hat[n];
      e.signal += s[n] * s[n];
      e.error += d * d;
    }
  }
  return e;
}

double ratio_db(const Energies& e) {
  if (e.error == 0.0) return kSdrCapDb;
  return std::min(kSdrCapDb, 10.0 * std::log10(e.signal / e.error));
}

}  // namespace

double l1_loss(const Waveform& a, const Waveform& b) {
  require_same_shape(a, b, "l1_loss");
  const std::size_t count = a.channels() * a.length();
  if (count == 0) throw std::invalid_argument("l1_loss: empty signals");
  double sum = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t n = 0; n < a.length(); ++n) sum += std::abs(a.samples[c][n] - b.samples[c][n]);
  return sum / static_cast<double>(count);
}

double energy_conservation_loss(const Waveform& mixture, const std::vector<Waveform>& estimates) {
  if (estimates.size() != 4)
    throw std::invalid_argument("energy_conservation_loss: expected 4 estimates, got " +
                                std::to_string(estimates.size()));
  Waveform total(mixture.channels(), mixture.length(), mixture.sample_rate);
  for (const auto& e : estimates) {
    require_same_shape(mixture, e, "energy_conservation_loss");
    for (std::size_t c = 0; c < e.channels(); ++c)
      for (std::size_t n = 0; n < e.length(); ++n) total.samples[c][n] += e.samples[c][n];
  }
  return l1_loss(mixture, total);
}

double sdr_global(const Waveform& reference, const Waveform& estimate) {
  require_same_shape(reference, estimate, "sdr_global");
  const Energies e = energies(reference, estimate, 0, reference.length());
  if (!(e.signal > 0.0)) throw std::invalid_argument("sdr_global: reference has zero energy");
  return ratio_db(e);
}

FramewiseSdr sdr_framewise(const Waveform& reference, const Waveform& estimate, double frame_seconds) {
  require_same_shape(reference, estimate, "sdr_framewise_median");
  if (!(frame_seconds > 0.0)) throw std::invalid_argument("sdr_framewise_median: frame length must be positive");
  const auto frame = static_cast<std::size_t>(std::llround(frame_seconds * reference.sample_rate));
  if (frame == 0 || reference.length() < frame)
    throw std::invalid_argument("sdr_framewise_median: signal shorter than one frame");

  FramewiseSdr result;
  result.frames_total = reference.length() / frame;
  std::vector<double> values;
  for (std::size_t f = 0; f < result.frames_total; ++f) {
    const Energies e = energies(reference, estimate, f * frame, (f + 1) * frame);
    if (e.signal < kSilentFrameEnergy) continue;
    values.push_back(ratio_db(e));
  }
  if (values.empty()) throw std::invalid_argument("sdr_framewise_median: every frame has a silent reference");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  result.median_db = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  result.frames_used = values.size();
  return result;
}

double sdr_framewise_median(const Waveform& reference, const Waveform& estimate, double frame_seconds) {
  return sdr_framewise(reference, estimate, frame_seconds).median_db;
}

MetricReport evaluate(const Waveform& reference, const Waveform& estimate, std::string track, std::string source) {
  MetricReport r;
  r.track = std::move(track);
  r.source = std::move(source);
  r.sdr_global_db = sdr_global(reference, estimate);
  const FramewiseSdr framewise = sdr_framewise(reference, estimate);
  r.sdr_median_db = framewise.median_db;
  r.frames_used = framewise.frames_used;
  return r;
}

std::string to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["track"] = report.track;
  j["source"] = report.source;
  j["sdr_global_db"] = report.sdr_global_db;
  j["sdr_median_db"] = report.sdr_median_db;
  j["frames_used"] = report.frames_used;
  return j.dump(2);
}

}  // namespace cws
