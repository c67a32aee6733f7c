#include "cws/pipeline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cws/parallel.hpp"

namespace cws {

Segments segment(const Waveform& x, double seconds) {
  x.validate();
  if (x.length() == 0) throw std::invalid_argument("segment: empty input");
  if (!(seconds > 0.0)) throw std::invalid_argument("segment: segment length must be positive");
  const auto seg_len = static_cast<std::size_t>(std::llround(seconds * x.sample_rate));
  if (seg_len == 0) throw std::invalid_argument("segment: segment shorter than one sample");

  Segments s;
  s.segment_length = seg_len;
  for (std::size_t start = 0; start < x.length(); start += seg_len) {
    const std::size_t n = std::min(seg_len, x.length() - start);
    Waveform part(x.channels(), seg_len, x.sample_rate);
    for (std::size_t c = 0; c < x.channels(); ++c)
      std::copy_n(x.samples[c].begin() + static_cast<std::ptrdiff_t>(start), n, part.samples[c].begin());
    s.parts.push_back(std::move(part));
    s.lengths.push_back(n);
  }
  return s;
}

Waveform desegment(const Segments& s) {
  if (s.parts.empty() || s.parts.size() != s.lengths.size())
    throw std::invalid_argument("desegment: inconsistent segment list");
  std::size_t total = 0;
  for (std::size_t i = 0; i < s.parts.size(); ++i) {
    if (s.lengths[i] > s.parts[i].length() || s.parts[i].channels() != s.parts[0].channels())
      throw std::invalid_argument("desegment: inconsistent segment list");
    total += s.lengths[i];
  }
  Waveform out(s.parts[0].channels(), total, s.parts[0].sample_rate);
  std::size_t at = 0;
  for (std::size_t i = 0; i < s.parts.size(); ++i) {
    for (std::size_t c = 0; c < out.channels(); ++c)
      std::copy_n(s.parts[i].samples[c].begin(), s.lengths[i], out.samples[c].begin() + static_cast<std::ptrdiff_t>(at));
    at += s.lengths[i];
  }
  return out;
}

ConstantEstimator::ConstantEstimator(int in_channels, int out_sources, double mask_logit, double phase_real,
                                     double phase_imag, double mag_residual)
    : in_channels_(in_channels),
      out_sources_(out_sources),
      mask_logit_(mask_logit),
      phase_real_(phase_real),
      phase_imag_(phase_imag),
      mag_residual_(mag_residual) {
  if (in_channels < 1 || out_sources < 1) throw std::invalid_argument("constant estimator: bad channel counts");
}

std::vector<NetworkOutput> ConstantEstimator::estimate(const RealTensor& magnitude) const {
  if (static_cast<int>(magnitude.channels()) != in_channels_)
    throw std::invalid_argument("constant estimator: channel mismatch");
  std::vector<NetworkOutput> outs;
  for (int s = 0; s < out_sources_; ++s) {
    NetworkOutput o;
    o.mask_logits = RealTensor(magnitude.channels(), magnitude.frames(), magnitude.bins(), mask_logit_);
    o.phase_real = RealTensor(magnitude.channels(), magnitude.frames(), magnitude.bins(), phase_real_);
    o.phase_imag = RealTensor(magnitude.channels(), magnitude.frames(), magnitude.bins(), phase_imag_);
    o.mag_residual = RealTensor(magnitude.channels(), magnitude.frames(), magnitude.bins(), mag_residual_);
    outs.push_back(std::move(o));
  }
  return outs;
}

namespace {

std::vector<Waveform> separate_segment(const Waveform& seg, const SpectrogramEstimator& estimator,
                                       const FilterBank& fb, const StftConfig& stft_config) {
  const std::size_t bands = static_cast<std::size_t>(fb.num_bands);
  const std::size_t context = static_cast<std::size_t>(fb.taps);
  const std::size_t needed = context + seg.length() + context;
  const std::size_t padded_length = (needed + bands - 1) / bands * bands;

  Waveform padded(seg.channels(), padded_length, seg.sample_rate);
  for (std::size_t c = 0; c < seg.channels(); ++c)
    std::copy(seg.samples[c].begin(), seg.samples[c].end(),
              padded.samples[c].begin() + static_cast<std::ptrdiff_t>(context));

  const SubbandSignal sb = analysis(padded, fb);
  const MagPhase mix = to_magphase(stft(sb, stft_config));
  const auto outs = estimator.estimate(mix.magnitude);
  if (static_cast<int>(outs.size()) != estimator.out_sources())
    throw std::runtime_error("estimator returned " + std::to_string(outs.size()) + " sources");

  const std::size_t offset = context + static_cast<std::size_t>(fb.system_delay);
  std::vector<Waveform> result;
  for (const auto& out : outs) {
    const ComplexSpectrogram est = apply_cirm(mix, out);
    const SubbandSignal est_sb = unstack_subbands(istft(est, sb.length()), sb.channels(), seg.sample_rate);
    const Waveform full = synthesis(est_sb, fb);
    Waveform cropped(seg.channels(), seg.length(), seg.sample_rate);
    for (std::size_t c = 0; c < seg.channels(); ++c)
      std::copy_n(full.samples[c].begin() + static_cast<std::ptrdiff_t>(offset), seg.length(),
                  cropped.samples[c].begin());
    result.push_back(std::move(cropped));
  }
  return result;
}

}  // namespace

std::vector<Waveform> separate(const Waveform& x, const SpectrogramEstimator& estimator, const FilterBank& fb,
                               const SeparateOptions& options) {
  x.validate();
  fb.validate();
  options.stft.validate();
  if (x.sample_rate != kPipelineRate)
    throw std::invalid_argument("separate: expected " + std::to_string(kPipelineRate) + " Hz input, got " +
                                std::to_string(x.sample_rate));
  if (estimator.in_channels() != 2 * fb.num_bands)
    throw std::invalid_argument("separate: estimator takes " + std::to_string(estimator.in_channels()) +
                                " streams but a stereo " + std::to_string(fb.num_bands) + "-band split gives " +
                                std::to_string(2 * fb.num_bands));

  Waveform stereo = x;
  if (stereo.channels() == 1) stereo.samples.push_back(stereo.samples.front());

  const Segments segs = segment(stereo, options.segment_seconds);
  std::vector<std::vector<Waveform>> per_segment(segs.parts.size());
  parallel_for(segs.parts.size(), [&](std::size_t i) {
    per_segment[i] = separate_segment(segs.parts[i], estimator, fb, options.stft);
  });

  std::vector<Waveform> sources;
  for (int s = 0; s < estimator.out_sources(); ++s) {
    Segments out{{}, segs.lengths, segs.segment_length};
    for (auto& seg_out : per_segment) out.parts.push_back(std::move(seg_out[s]));
    sources.push_back(desegment(out));
  }
  return sources;
}

std::vector<Waveform> separate(const Waveform& x, const Model& model, const FilterBank& fb,
                               const SeparateOptions& options) {
  return separate(x, ModelEstimator(model), fb, options);
}

Waveform instrumental_residual(const Waveform& mixture, const Waveform& vocals) {
  if (mixture.channels() != vocals.channels() || mixture.length() != vocals.length())
    throw std::invalid_argument("instrumental_residual: mixture and vocals differ in shape");
  if (mixture.sample_rate != vocals.sample_rate)
    throw std::invalid_argument("instrumental_residual: sample rates differ");
  Waveform out = mixture;
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (std::size_t n = 0; n < out.length(); ++n) out.samples[c][n] -= vocals.samples[c][n];
  return out;
}

}  // namespace cws
