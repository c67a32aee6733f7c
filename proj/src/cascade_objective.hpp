#pragma once

#include <cstddef>
#include <vector>

// Internal: cascade reconstruction error of a prototype-modulated bank.
namespace cws::detail {

int alignment(int taps);
int cascade_delay(int taps);

// Pseudo-QMF cosine tables, band-major: table[j * taps + n].
struct Modulation {
  int bands;
  int taps;
  std::vector<double> analysis;
  std::vector<double> synthesis;

  Modulation(int num_bands, int num_taps);
};

// Mean over impulse phases p = 0..N-1 of ||t_p - delta(. - p - delay)||^2,
// where t_p[k] = sum_j sum_i h_j[i N + c - p] g_j[k + c - i N] is the response
// of analysis() followed by synthesis() to an impulse at p.
double cascade_error(const std::vector<double>& h, const std::vector<double>& g, int bands, int taps, int delay);

// Objective as a function of the prototype. After set_prototype(p),
// perturbed(m, d) returns the objective at p + d * e_m. It expands only the
// response terms that involve tap m, so a central difference costs O(N * taps)
// instead of a full O(N * taps^2) re-evaluation.
class PrototypeObjective {
 public:
  PrototypeObjective(int bands, int taps);

  double evaluate(const std::vector<double>& prototype) const;

  void set_prototype(const std::vector<double>& prototype);
  double value() const { return total_ / bands_; }
  double perturbed(int tap, double delta, std::vector<double>& scratch) const;
  std::size_t scratch_size() const { return static_cast<std::size_t>(length_); }

 private:
  void bank(const std::vector<double>& prototype, std::vector<double>& h, std::vector<double>& g) const;

  int bands_;
  int taps_;
  int centre_;
  int delay_;
  int base_;
  int origin_;
  int length_;
  Modulation modulation_;

  std::vector<double> h_, g_;
  std::vector<double> residual_;  // [phase][length_]
  double total_ = 0.0;
};

}  // namespace cws::detail
