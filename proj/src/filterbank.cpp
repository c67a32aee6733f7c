#include "cws/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cascade_objective.hpp"
#include "cws/parallel.hpp"
#include "json.hpp"

namespace cws {

namespace {

using Json = nlohmann::json;

void check_factor(int factor) {
  if (factor < 1) throw std::invalid_argument("resampling factor must be >= 1, got " + std::to_string(factor));
}

using detail::alignment;
using detail::cascade_delay;

std::vector<double> flatten(const std::vector<std::vector<double>>& m) {
  std::vector<double> flat;
  for (const auto& row : m) flat.insert(flat.end(), row.begin(), row.end());
  return flat;
}

template <typename T>
std::vector<T> cast_vector(const std::vector<double>& v) {
  return std::vector<T>(v.begin(), v.end());
}

template <typename T>
std::vector<double> analyse_band(const std::vector<T>& x, const std::vector<T>& h, int bands) {
  const long len = static_cast<long>(x.size());
  const long taps = static_cast<long>(h.size());
  const long c = alignment(static_cast<int>(taps));
  const long out_len = (len + bands - 1) / bands;
  std::vector<double> out(out_len);
  for (long i = 0; i < out_len; ++i) {
    const long k = i * bands;
    T acc = 0;
    for (long m = 0; m < taps; ++m) {
      const long idx = k - m + c;
      if (idx >= 0 && idx < len) acc += x[idx] * h[m];
    }
    out[i] = static_cast<double>(acc);
  }
  return out;
}

template <typename T>
void synthesise_channel(const std::vector<std::vector<double>>& bands_in, const FilterBank& fb,
                        std::vector<double>& out) {
  const long n_bands = fb.num_bands;
  const long taps = fb.taps;
  const long c = alignment(fb.taps);
  const long len = static_cast<long>(out.size());
  std::vector<T> acc(out.size(), T(0));
  for (long j = 0; j < n_bands; ++j) {
    const std::vector<T> g = cast_vector<T>(fb.synthesis[j]);
    const auto& sb = bands_in[j];
    for (long i = 0; i < static_cast<long>(sb.size()); ++i) {
      const T a = static_cast<T>(sb[i]);
      if (a == T(0)) continue;
      for (long m = 0; m < taps; ++m) {
        const long k = i * n_bands + m - c;
        if (k >= 0 && k < len) acc[k] += a * g[m];
      }
    }
  }
  for (long k = 0; k < len; ++k) out[k] = static_cast<double>(acc[k]);
}

template <typename T>
SubbandSignal analysis_impl(const Waveform& x, const FilterBank& fb) {
  SubbandSignal sb;
  sb.source_rate = x.sample_rate;
  sb.samples.resize(x.channels());
  std::vector<std::vector<T>> filters;
  for (const auto& h : fb.analysis) filters.push_back(cast_vector<T>(h));
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const std::vector<T> xc = cast_vector<T>(x.samples[c]);
    sb.samples[c].reserve(fb.num_bands);
    for (int j = 0; j < fb.num_bands; ++j) sb.samples[c].push_back(analyse_band(xc, filters[j], fb.num_bands));
  }
  return sb;
}

std::vector<std::vector<double>> json_matrix(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw std::invalid_argument(std::string("filterbank json: missing array '") + key + "'");
  }
  return j.at(key).get<std::vector<std::vector<double>>>();
}

}  // namespace

void FilterBank::validate() const {
  if (num_bands < 1) throw std::invalid_argument("filterbank needs at least one band");
  if (taps < 2 || taps % 2 != 0) throw std::invalid_argument("filterbank taps must be even and >= 2");
  auto check = [&](const std::vector<std::vector<double>>& m, const char* name) {
    if (m.size() != static_cast<std::size_t>(num_bands)) {
      throw std::invalid_argument(std::string(name) + " filter count does not match num_bands");
    }
    for (const auto& row : m) {
      if (row.size() != static_cast<std::size_t>(taps)) {
        throw std::invalid_argument(std::string(name) + " filter length does not match taps");
      }
      for (double v : row) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " filter has non-finite taps");
      }
    }
  };
  check(analysis, "analysis");
  check(synthesis, "synthesis");
}

std::vector<double> decimate(std::span<const double> x, int factor) {
  check_factor(factor);
  std::vector<double> out;
  out.reserve((x.size() + factor - 1) / factor);
  for (std::size_t k = 0; k < x.size(); k += factor) out.push_back(x[k]);
  return out;
}

std::vector<double> zero_insert(std::span<const double> x, int factor) {
  check_factor(factor);
  std::vector<double> out(x.size() * factor, 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) out[k * factor] = x[k];
  return out;
}

std::vector<double> conv_same(std::span<const double> x, std::span<const double> h) {
  const long len = static_cast<long>(x.size());
  const long taps = static_cast<long>(h.size());
  const long c = taps / 2 - 1;
  std::vector<double> y(x.size(), 0.0);
  for (long k = 0; k < len; ++k) {
    double acc = 0.0;
    for (long m = 0; m < taps; ++m) {
      const long idx = k - m + c;
      if (idx >= 0 && idx < len) acc += x[idx] * h[m];
    }
    y[k] = acc;
  }
  return y;
}

std::vector<double> initial_prototype(int num_bands, int taps) {
  constexpr double kBeta = 9.0;
  const double cutoff = std::numbers::pi / (2.0 * num_bands);
  const double centre = (taps - 1) / 2.0;
  const double norm = std::cyl_bessel_i(0.0, kBeta);
  std::vector<double> p(taps);
  for (int n = 0; n < taps; ++n) {
    const double m = n - centre;
    const double sinc = m == 0.0 ? cutoff / std::numbers::pi : std::sin(cutoff * m) / (std::numbers::pi * m);
    const double r = 2.0 * n / (taps - 1) - 1.0;
    const double window = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    p[n] = sinc * window;
  }
  return p;
}

FilterBank modulate_prototype(std::span<const double> prototype, int num_bands) {
  const int taps = static_cast<int>(prototype.size());
  const detail::Modulation mod(num_bands, taps);
  FilterBank fb;
  fb.num_bands = num_bands;
  fb.taps = taps;
  fb.system_delay = cascade_delay(taps);
  fb.analysis.assign(num_bands, std::vector<double>(taps));
  fb.synthesis.assign(num_bands, std::vector<double>(taps));
  for (int j = 0; j < num_bands; ++j) {
    for (int n = 0; n < taps; ++n) {
      fb.analysis[j][n] = mod.analysis[j * taps + n] * prototype[n];
      fb.synthesis[j][n] = mod.synthesis[j * taps + n] * prototype[n];
    }
  }
  return fb;
}

double cascade_objective(const FilterBank& fb) {
  fb.validate();
  if (std::abs(fb.system_delay) >= fb.taps) throw std::invalid_argument("system_delay out of range");
  return detail::cascade_error(flatten(fb.analysis), flatten(fb.synthesis), fb.num_bands, fb.taps,
                               fb.system_delay);
}

FilterBank design_filterbank(int num_bands, int taps, int iterations, double step) {
  if (num_bands != 2 && num_bands != 4 && num_bands != 8) {
    throw std::invalid_argument("unsupported band count " + std::to_string(num_bands) + " (expected 2, 4 or 8)");
  }
  if (taps <= 0 || taps % (2 * num_bands) != 0) {
    throw std::invalid_argument("taps must be a positive multiple of 2 * num_bands");
  }
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");

  detail::PrototypeObjective objective(num_bands, taps);
  std::vector<double> p = initial_prototype(num_bands, taps);

  // E(s p) = A s^4 + B s^2 + 1 for a global gain s; jump to its minimiser.
  {
    std::vector<double> scaled = p;
    for (double& v : scaled) v *= std::numbers::sqrt2;
    const double e1 = objective.evaluate(p);
    const double e2 = objective.evaluate(scaled);
    const double a = (e2 - 2.0 * e1 + 1.0) / 2.0;
    const double b = e1 - 1.0 - a;
    if (a > 0.0 && b < 0.0) {
      const double s = std::sqrt(-b / (2.0 * a));
      for (double& v : p) v *= s;
    }
  }

  constexpr double kFiniteStep = 1e-6;
  constexpr double kMinStep = 1e-18;
  objective.set_prototype(p);
  double current = objective.value();
  std::vector<double> grad(taps);
  const std::size_t workers = std::min<std::size_t>(worker_count(), grad.size());
  std::vector<std::vector<double>> scratch(workers, std::vector<double>(objective.scratch_size()));
  std::vector<double> candidate(taps);
  for (int it = 0; it < iterations; ++it) {
    parallel_for(workers, [&](std::size_t w) {
      for (std::size_t m = w; m < grad.size(); m += workers) {
        const int tap = static_cast<int>(m);
        const double up = objective.perturbed(tap, kFiniteStep, scratch[w]);
        const double down = objective.perturbed(tap, -kFiniteStep, scratch[w]);
        grad[m] = (up - down) / (2.0 * kFiniteStep);
      }
    });

    bool moved = false;
    while (step > kMinStep) {
      for (int n = 0; n < taps; ++n) candidate[n] = p[n] - step * grad[n];
      const double value = objective.evaluate(candidate);
      if (value < current) {
        p.swap(candidate);
        objective.set_prototype(p);
        current = objective.value();
        step *= 1.2;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }

  if (!(current <= kDesignObjectiveLimit)) {
    std::ostringstream msg;
    msg << "filterbank design did not converge: objective " << current << " > " << kDesignObjectiveLimit
        << " after " << iterations << " iterations";
    throw DesignError(msg.str(), current);
  }
  return modulate_prototype(p, num_bands);
}

SubbandSignal analysis(const Waveform& x, const FilterBank& fb, Precision precision) {
  fb.validate();
  if (x.channels() == 0 || x.length() == 0) throw std::invalid_argument("analysis: empty input");
  return precision == Precision::f32 ? analysis_impl<float>(x, fb) : analysis_impl<double>(x, fb);
}

Waveform synthesis(const SubbandSignal& sb, const FilterBank& fb, Precision precision) {
  fb.validate();
  if (sb.bands() != static_cast<std::size_t>(fb.num_bands)) {
    throw std::invalid_argument("synthesis: signal has " + std::to_string(sb.bands()) + " bands, filterbank " +
                                std::to_string(fb.num_bands));
  }
  for (const auto& ch : sb.samples) {
    if (ch.size() != sb.bands()) throw std::invalid_argument("synthesis: ragged band layout");
    for (const auto& band : ch) {
      if (band.size() != sb.length()) throw std::invalid_argument("synthesis: bands differ in length");
    }
  }
  Waveform out(sb.channels(), sb.length() * fb.num_bands, sb.source_rate);
  for (std::size_t c = 0; c < sb.channels(); ++c) {
    if (precision == Precision::f32) {
      synthesise_channel<float>(sb.samples[c], fb, out.samples[c]);
    } else {
      synthesise_channel<double>(sb.samples[c], fb, out.samples[c]);
    }
  }
  return out;
}

ReconstructionReport measure_reconstruction(const FilterBank& fb, const Waveform& probe, Precision precision) {
  fb.validate();
  if (probe.length() < 4 * static_cast<std::size_t>(fb.taps)) {
    throw std::invalid_argument("measure_reconstruction: probe shorter than 4 * taps");
  }
  const Waveform y = synthesis(analysis(probe, fb, precision), fb, precision);
  const long len = static_cast<long>(probe.length());
  const long delay = fb.system_delay;
  const long begin = fb.taps;
  const long end = std::min(len - fb.taps, static_cast<long>(y.length()) - delay);

  double signal = 0.0;
  double error = 0.0;
  ReconstructionReport report;
  for (std::size_t c = 0; c < probe.channels(); ++c) {
    for (long n = std::max(begin, -delay); n < end; ++n) {
      const double s = probe.samples[c][n];
      const double d = s - y.samples[c][n + delay];
      signal += s * s;
      error += d * d;
      report.max_abs_err = std::max(report.max_abs_err, std::abs(d));
    }
  }
  if (signal <= 0.0) throw std::invalid_argument("measure_reconstruction: zero-energy probe");
  report.snr_db = error > 0.0 ? std::min(kSnrCapDb, 10.0 * std::log10(signal / error)) : kSnrCapDb;
  return report;
}

std::string filterbank_to_json(const FilterBank& fb) {
  fb.validate();
  Json j;
  j["num_bands"] = fb.num_bands;
  j["taps"] = fb.taps;
  j["system_delay"] = fb.system_delay;
  j["analysis"] = fb.analysis;
  j["synthesis"] = fb.synthesis;
  return j.dump(2);
}

FilterBank filterbank_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("filterbank json: ") + e.what());
  }
  FilterBank fb;
  try {
    fb.num_bands = j.at("num_bands").get<int>();
    fb.taps = j.at("taps").get<int>();
    fb.system_delay = j.at("system_delay").get<int>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("filterbank json: ") + e.what());
  }
  fb.analysis = json_matrix(j, "analysis");
  fb.synthesis = json_matrix(j, "synthesis");
  fb.validate();
  return fb;
}

void save_filterbank(const FilterBank& fb, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << filterbank_to_json(fb) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

FilterBank load_filterbank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return filterbank_from_json(buf.str());
}

}  // namespace cws
