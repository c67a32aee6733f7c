#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cws {

// Dense row-major [channels x frames x bins] array.
template <typename T>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t frames, std::size_t bins, T fill = T(0))
      : channels_(channels), frames_(frames), bins_(bins), data_(channels * frames * bins, fill) {}

  std::size_t channels() const { return channels_; }
  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t c, std::size_t t, std::size_t f) { return data_[(c * frames_ + t) * bins_ + f]; }
  const T& operator()(std::size_t c, std::size_t t, std::size_t f) const {
    return data_[(c * frames_ + t) * bins_ + f];
  }

  T* frame(std::size_t c, std::size_t t) { return data_.data() + (c * frames_ + t) * bins_; }
  const T* frame(std::size_t c, std::size_t t) const { return data_.data() + (c * frames_ + t) * bins_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Tensor3& other) const {
    return channels_ == other.channels_ && frames_ == other.frames_ && bins_ == other.bins_;
  }

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<T> data_;
};

using RealTensor = Tensor3<double>;

}  // namespace cws
