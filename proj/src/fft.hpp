#pragma once

#include <complex>
#include <vector>

namespace cws::detail {

// In-place iterative radix-2 FFT. size must be a power of two.
class Fft {
 public:
  explicit Fft(std::size_t size);

  std::size_t size() const { return size_; }
  void forward(std::vector<std::complex<double>>& data) const { transform(data, false); }
  // Unnormalised inverse: forward-then-inverse scales by size().
  void inverse(std::vector<std::complex<double>>& data) const { transform(data, true); }

 private:
  void transform(std::vector<std::complex<double>>& data, bool inverse) const;

  std::size_t size_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<std::complex<double>> twiddles_;
};

}  // namespace cws::detail
