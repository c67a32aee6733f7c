#include "cascade_objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cws::detail {

int alignment(int taps) { return taps / 2 - 1; }

int cascade_delay(int taps) { return taps - 1 - 2 * alignment(taps); }

Modulation::Modulation(int num_bands, int num_taps)
    : bands(num_bands),
      taps(num_taps),
      analysis(static_cast<std::size_t>(num_bands) * num_taps),
      synthesis(static_cast<std::size_t>(num_bands) * num_taps) {
  const double centre = (taps - 1) / 2.0;
  for (int j = 1; j <= bands; ++j) {
    const double phase = (j % 2 == 0 ? 1.0 : -1.0) * std::numbers::pi / 4.0;
    const double freq = (2.0 * j - 1.0) * std::numbers::pi / (2.0 * bands);
    for (int n = 0; n < taps; ++n) {
      const double arg = freq * (n - centre);
      analysis[(j - 1) * taps + n] = 2.0 * std::cos(arg + phase);
      synthesis[(j - 1) * taps + n] = 2.0 * std::cos(arg - phase);
    }
  }
}

namespace {

struct Geometry {
  int base;    // multiple of bands, far enough from 0 that no index goes negative
  int origin;  // response index stored at buffer position 0
  int length;

  Geometry(int bands, int taps) {
    base = bands * ((2 * taps + bands - 1) / bands);
    origin = base - 2 * taps;
    length = 5 * taps + bands;
  }
};

// Writes t_p - d_p for phase p into out[0, geometry.length).
void phase_residual(const double* h, const double* g, int bands, int taps, int delay, const Geometry& geo,
                    int phase, double* out) {
  const int centre = alignment(taps);
  std::fill(out, out + geo.length, 0.0);
  const int pos = geo.base + phase;
  const int first = pos - centre;
  const int i0 = (first + bands - 1) / bands;
  for (int j = 0; j < bands; ++j) {
    const double* __restrict gj = g + j * taps;
    const double* hj = h + j * taps;
    for (int i = i0; i * bands < first + taps; ++i) {
      const double a = hj[i * bands + centre - pos];
      double* __restrict dst = out + (i * bands - centre - geo.origin);
      for (int v = 0; v < taps; ++v) dst[v] += a * gj[v];
    }
  }
  out[pos + delay - geo.origin] -= 1.0;
}

}  // namespace

double cascade_error(const std::vector<double>& h, const std::vector<double>& g, int bands, int taps, int delay) {
  const Geometry geo(bands, taps);
  std::vector<double> buf(geo.length);
  double total = 0.0;
  for (int phase = 0; phase < bands; ++phase) {
    phase_residual(h.data(), g.data(), bands, taps, delay, geo, phase, buf.data());
    for (double e : buf) total += e * e;
  }
  return total / bands;
}

PrototypeObjective::PrototypeObjective(int bands, int taps)
    : bands_(bands),
      taps_(taps),
      centre_(alignment(taps)),
      delay_(cascade_delay(taps)),
      modulation_(bands, taps) {
  const Geometry geo(bands, taps);
  base_ = geo.base;
  origin_ = geo.origin;
  length_ = geo.length;
}

void PrototypeObjective::bank(const std::vector<double>& prototype, std::vector<double>& h,
                              std::vector<double>& g) const {
  h.resize(modulation_.analysis.size());
  g.resize(modulation_.synthesis.size());
  for (int j = 0; j < bands_; ++j) {
    for (int n = 0; n < taps_; ++n) {
      const std::size_t idx = static_cast<std::size_t>(j) * taps_ + n;
      h[idx] = modulation_.analysis[idx] * prototype[n];
      g[idx] = modulation_.synthesis[idx] * prototype[n];
    }
  }
}

double PrototypeObjective::evaluate(const std::vector<double>& prototype) const {
  std::vector<double> h, g;
  bank(prototype, h, g);
  return cascade_error(h, g, bands_, taps_, delay_);
}

void PrototypeObjective::set_prototype(const std::vector<double>& prototype) {
  bank(prototype, h_, g_);
  const Geometry geo(bands_, taps_);
  residual_.assign(static_cast<std::size_t>(bands_) * length_, 0.0);
  total_ = 0.0;
  for (int phase = 0; phase < bands_; ++phase) {
    double* out = residual_.data() + static_cast<std::size_t>(phase) * length_;
    phase_residual(h_.data(), g_.data(), bands_, taps_, delay_, geo, phase, out);
    for (int k = 0; k < length_; ++k) total_ += out[k] * out[k];
  }
}

// Perturbing tap m changes h_j[m] by d * Ca_j[m] and g_j[m] by d * Cs_j[m].
// In phase p the affected response samples all lie in the window
// [p + base - 2c + m, ... + taps): the g-side change hits every N-th sample,
// the h-side change (one phase only) the whole window, plus a d^2 cross term.
double PrototypeObjective::perturbed(int m, double d, std::vector<double>& win) const {
  const int n_bands = bands_;
  const int taps = taps_;
  const int c = centre_;
  const double* ca = modulation_.analysis.data();
  const double* cs = modulation_.synthesis.data();
  win.resize(taps);
  double change = 0.0;
  for (int phase = 0; phase < n_bands; ++phase) {
    const int pos = base_ + phase;
    const int first = pos - c;
    const int start = pos - 2 * c + m;
    std::fill(win.begin(), win.end(), 0.0);

    const int i0 = (first + n_bands - 1) / n_bands;
    for (int i = i0; i * n_bands < first + taps; ++i) {
      const int u = i * n_bands + c - pos;
      double acc = 0.0;
      for (int j = 0; j < n_bands; ++j) acc += h_[j * taps + u] * cs[j * taps + m];
      win[i * n_bands - first] += d * acc;
    }

    if ((m + pos - c) % n_bands == 0) {
      double cross = 0.0;
      for (int j = 0; j < n_bands; ++j) {
        const double a = d * ca[j * taps + m];
        const double* gj = g_.data() + j * taps;
        for (int v = 0; v < taps; ++v) win[v] += a * gj[v];
        cross += ca[j * taps + m] * cs[j * taps + m];
      }
      win[m] += d * d * cross;
    }

    const double* e = residual_.data() + static_cast<std::size_t>(phase) * length_ + (start - origin_);
    for (int v = 0; v < taps; ++v) change += win[v] * (2.0 * e[v] + win[v]);
  }
  return (total_ + change) / n_bands;
}

}  // namespace cws::detail
