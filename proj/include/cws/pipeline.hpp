#pragma once

#include <cstddef>
#include <vector>

#include "cws/cirm.hpp"
#include "cws/filterbank.hpp"
#include "cws/resunet.hpp"
#include "cws/spectral.hpp"
#include "cws/wave_io.hpp"

namespace cws {

inline constexpr int kPipelineRate = 44100;
inline constexpr double kSegmentSeconds = 10.0;

// Non-overlapping rectangular segments, all of full length; lengths[i] is the
// number of real (unpadded) samples in segment i.
struct Segments {
  std::vector<Waveform> parts;
  std::vector<std::size_t> lengths;
  std::size_t segment_length = 0;
};

Segments segment(const Waveform& x, double seconds = kSegmentSeconds);
Waveform desegment(const Segments& s);

// Anything that maps a mixture magnitude [streams x T x F] to per-source
// network outputs of the same shape.
class SpectrogramEstimator {
 public:
  virtual ~SpectrogramEstimator() = default;
  virtual int in_channels() const = 0;
  virtual int out_sources() const = 0;
  virtual std::vector<NetworkOutput> estimate(const RealTensor& magnitude) const = 0;
};

class ModelEstimator : public SpectrogramEstimator {
 public:
  explicit ModelEstimator(const Model& model) : model_(model) {}
  int in_channels() const override { return model_.config().in_channels; }
  int out_sources() const override { return model_.config().out_sources; }
  std::vector<NetworkOutput> estimate(const RealTensor& magnitude) const override { return model_.forward(magnitude); }

 private:
  const Model& model_;
};

// Fills every bin with the same (M, P_r, P_i, Q). The defaults give the
// identity mask.
class ConstantEstimator : public SpectrogramEstimator {
 public:
  ConstantEstimator(int in_channels, int out_sources, double mask_logit = 40.0, double phase_real = 1.0,
                    double phase_imag = 0.0, double mag_residual = 0.0);
  int in_channels() const override { return in_channels_; }
  int out_sources() const override { return out_sources_; }
  std::vector<NetworkOutput> estimate(const RealTensor& magnitude) const override;

 private:
  int in_channels_;
  int out_sources_;
  double mask_logit_, phase_real_, phase_imag_, mag_residual_;
};

struct SeparateOptions {
  double segment_seconds = kSegmentSeconds;
  StftConfig stft;
};

// Per segment: analysis -> stft -> estimate -> apply_cirm -> istft ->
// synthesis. Each segment is zero-padded by the filter length on both sides
// before analysis and cropped after synthesis, with the bank's system_delay
// removed. Mono input is duplicated to stereo. Returns one stereo waveform
// per source, each the length of x.
std::vector<Waveform> separate(const Waveform& x, const SpectrogramEstimator& estimator, const FilterBank& fb,
                               const SeparateOptions& options = {});
std::vector<Waveform> separate(const Waveform& x, const Model& model, const FilterBank& fb,
                               const SeparateOptions& options = {});

// mixture - vocals, samplewise.
Waveform instrumental_residual(const Waveform& mixture, const Waveform& vocals);

}  // namespace cws
