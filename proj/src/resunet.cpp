#include "cws/resunet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "json.hpp"
#include "cws/parallel.hpp"

namespace cws {

using json = nlohmann::json;

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (in_channels < 1) fail("in_channels must be positive");
  if (out_sources < 1) fail("out_sources must be positive");
  if (levels() < 1) fail("at least one level required");
  if (static_cast<int>(encoder_blocks.size()) != levels() || static_cast<int>(decoder_blocks.size()) != levels())
    fail("block lists must have one entry per level");
  for (int i = 0; i < levels(); ++i) {
    if (channels_per_level[i] < 1) fail("channel counts must be positive");
    if (encoder_blocks[i] < 1 || decoder_blocks[i] < 1) fail("block counts must be positive");
  }
  if (bottleneck_channels < 1) fail("bottleneck_channels must be positive");
  if (bottleneck_blocks < 1) fail("bottleneck_blocks must be positive");
  if (!std::isfinite(leaky_slope) || leaky_slope < 0.0) fail("leaky_slope must be finite and non-negative");
  if (target_layer_count < 0) fail("target_layer_count must be non-negative");
}

std::string ModelConfig::to_json() const {
  json j;
  j["in_channels"] = in_channels;
  j["out_sources"] = out_sources;
  j["channels_per_level"] = channels_per_level;
  j["bottleneck_channels"] = bottleneck_channels;
  j["encoder_blocks"] = encoder_blocks;
  j["decoder_blocks"] = decoder_blocks;
  j["bottleneck_blocks"] = bottleneck_blocks;
  j["leaky_slope"] = leaky_slope;
  j["target_layer_count"] = target_layer_count;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    c.in_channels = j.at("in_channels").get<int>();
    c.out_sources = j.at("out_sources").get<int>();
    c.channels_per_level = j.at("channels_per_level").get<std::vector<int>>();
    c.bottleneck_channels = j.at("bottleneck_channels").get<int>();
    c.encoder_blocks = j.at("encoder_blocks").get<std::vector<int>>();
    c.decoder_blocks = j.at("decoder_blocks").get<std::vector<int>>();
    c.bottleneck_blocks = j.at("bottleneck_blocks").get<int>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.target_layer_count = j.value("target_layer_count", 0);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string ModelConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ModelConfig preset(std::string_view name) {
  ModelConfig c;
  if (name == "tiny") {
    c.channels_per_level = {4, 4};
    c.bottleneck_channels = 4;
    c.encoder_blocks = {1, 1};
    c.decoder_blocks = {1, 1};
    c.bottleneck_blocks = 1;
  } else if (name == "vocals-276") {
    c.channels_per_level = {32, 64, 128, 256, 384, 384};
    c.bottleneck_channels = 384;
    c.encoder_blocks = std::vector<int>(6, 10);
    c.decoder_blocks = std::vector<int>(6, 10);
    c.bottleneck_blocks = 9;
    c.target_layer_count = 276;
  } else if (name == "other-166") {
    c.channels_per_level = {32, 64, 128, 256, 384, 384};
    c.bottleneck_channels = 384;
    c.encoder_blocks = std::vector<int>(6, 6);
    c.decoder_blocks = std::vector<int>(6, 6);
    c.bottleneck_blocks = 2;
    c.target_layer_count = 166;
  } else {
    throw std::invalid_argument("unknown preset: " + std::string(name));
  }
  return c;
}

std::vector<std::string> preset_names() { return {"tiny", "vocals-276", "other-166"}; }

std::size_t Parameter::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Model::Conv Model::add_conv(const std::string& name, int in, int out, int kernel, bool bias) {
  Conv conv{in, out, kernel, static_cast<int>(params_.size()), -1};
  params_.push_back({name + ".weight",
                     {static_cast<std::size_t>(out), static_cast<std::size_t>(in), static_cast<std::size_t>(kernel),
                      static_cast<std::size_t>(kernel)},
                     {}});
  if (bias) {
    conv.bias = static_cast<int>(params_.size());
    params_.push_back({name + ".bias", {static_cast<std::size_t>(out)}, {}});
  }
  return conv;
}

std::vector<Model::Block> Model::add_blocks(const std::string& prefix, int in, int out, int count) {
  std::vector<Block> blocks;
  for (int b = 0; b < count; ++b) {
    const std::string name = prefix + ".block." + std::to_string(b);
    const int block_in = b == 0 ? in : out;
    Block block;
    block.first = add_conv(name + ".conv1", block_in, out, 3, true);
    block.second = add_conv(name + ".conv2", out, out, 3, true);
    if (block_in != out) {
      block.has_shortcut = true;
      block.shortcut = add_conv(name + ".shortcut", block_in, out, 1, false);
    }
    blocks.push_back(block);
  }
  return blocks;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const int levels = config_.levels();
  const auto& ch = config_.channels_per_level;
  stem_ = add_conv("stem", config_.in_channels, ch[0], 3, true);
  int current = ch[0];
  for (int i = 0; i < levels; ++i) {
    encoder_.push_back({add_blocks("encoder." + std::to_string(i), current, ch[i], config_.encoder_blocks[i])});
    current = ch[i];
  }
  bottleneck_ = add_blocks("bottleneck", current, config_.bottleneck_channels, config_.bottleneck_blocks);
  current = config_.bottleneck_channels;
  decoder_.resize(levels);
  for (int i = levels - 1; i >= 0; --i) {
    const std::string prefix = "decoder." + std::to_string(i);
    DecoderLevel& level = decoder_[i];
    level.up = add_conv(prefix + ".up", current, ch[i], 3, true);
    level.blocks = add_blocks(prefix, 2 * ch[i], ch[i], config_.decoder_blocks[i]);
    current = ch[i];
  }
  head_ = add_conv("head", current, 4 * config_.out_sources * config_.in_channels, 3, false);

  if (config_.target_layer_count > 0 && count_layers() != config_.target_layer_count)
    throw std::invalid_argument("model config: built " + std::to_string(count_layers()) + " conv layers, expected " +
                                std::to_string(config_.target_layer_count));
}

bool Model::initialized() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](const Parameter& p) { return p.values.size() == p.element_count(); });
}

int Model::count_layers() const {
  return static_cast<int>(std::count_if(params_.begin(), params_.end(), [](const Parameter& p) {
    return p.name.size() > 7 && p.name.compare(p.name.size() - 7, 7, ".weight") == 0;
  }));
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.element_count();
  return n;
}

void Model::initialize_zero() {
  for (auto& p : params_) p.values.assign(p.element_count(), 0.0f);
}

void Model::initialize_random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    p.values.assign(p.element_count(), 0.0f);
    if (p.shape.size() != 4) continue;
    const double fan_in = static_cast<double>(p.shape[1] * p.shape[2] * p.shape[3]);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double bound = std::sqrt(3.0 / fan_in);
    for (auto& v : p.values) v = static_cast<float>(bound * dist(rng));
  }
}

namespace {

void conv2d_into(const FeatureMap& x, const Model::Conv& conv, const std::vector<Parameter>& params, FeatureMap& y) {
  if (x.channels != conv.in) throw std::logic_error("conv2d: channel mismatch");
  const int h = x.height;
  const int w = x.width;
  y = FeatureMap(conv.out, h, w);
  const float* weight = params[conv.weight].values.data();
  const float* bias = conv.bias >= 0 ? params[conv.bias].values.data() : nullptr;
  const int k = conv.kernel;
  const int half = k / 2;
  parallel_for(static_cast<std::size_t>(conv.out), [&](std::size_t o) {
    float* dst = y.plane(static_cast<int>(o));
    std::fill(dst, dst + static_cast<std::size_t>(h) * w, bias ? bias[o] : 0.0f);
    for (int i = 0; i < conv.in; ++i) {
      const float* src = x.plane(i);
      const float* wk = weight + (o * conv.in + i) * k * k;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const float wv = wk[dy * k + dx];
          if (wv == 0.0f) continue;
          const int oy = dy - half;
          const int ox = dx - half;
          const int x0 = std::max(0, -ox);
          const int x1 = std::min(w, w - ox);
          for (int r = std::max(0, -oy); r < std::min(h, h - oy); ++r) {
            float* __restrict out_row = dst + static_cast<std::size_t>(r) * w;
            const float* __restrict in_row = src + static_cast<std::size_t>(r + oy) * w + ox;
            for (int c = x0; c < x1; ++c) out_row[c] += wv * in_row[c];
          }
        }
      }
    }
  });
}

FeatureMap conv2d(const FeatureMap& x, const Model::Conv& conv, const std::vector<Parameter>& params) {
  FeatureMap y;
  conv2d_into(x, conv, params, y);
  return y;
}

void leaky_relu(FeatureMap& x, float slope) {
  for (float& v : x.data)
    if (v < 0.0f) v *= slope;
}

FeatureMap average_pool(const FeatureMap& x) {
  FeatureMap y(x.channels, x.height / 2, x.width / 2);
  for (int c = 0; c < x.channels; ++c) {
    const float* src = x.plane(c);
    float* dst = y.plane(c);
    for (int r = 0; r < y.height; ++r) {
      const float* a = src + static_cast<std::size_t>(2 * r) * x.width;
      const float* b = a + x.width;
      for (int q = 0; q < y.width; ++q)
        dst[r * y.width + q] = 0.25f * ((a[2 * q] + a[2 * q + 1]) + (b[2 * q] + b[2 * q + 1]));
    }
  }
  return y;
}

FeatureMap upsample_nearest(const FeatureMap& x) {
  FeatureMap y(x.channels, x.height * 2, x.width * 2);
  for (int c = 0; c < x.channels; ++c) {
    const float* src = x.plane(c);
    float* dst = y.plane(c);
    for (int r = 0; r < y.height; ++r)
      for (int q = 0; q < y.width; ++q) dst[r * y.width + q] = src[(r / 2) * x.width + q / 2];
  }
  return y;
}

FeatureMap concat(const FeatureMap& a, const FeatureMap& b) {
  FeatureMap y(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return y;
}

FeatureMap run_block(const Model::Block& block, const FeatureMap& x, const std::vector<Parameter>& params,
                     float slope) {
  FeatureMap mid = conv2d(x, block.first, params);
  leaky_relu(mid, slope);
  FeatureMap y = conv2d(mid, block.second, params);
  if (block.has_shortcut) {
    const FeatureMap s = conv2d(x, block.shortcut, params);
    for (std::size_t n = 0; n < y.data.size(); ++n) y.data[n] += s.data[n];
  } else {
    for (std::size_t n = 0; n < y.data.size(); ++n) y.data[n] += x.data[n];
  }
  return y;
}

FeatureMap run_blocks(const std::vector<Model::Block>& blocks, FeatureMap x, const std::vector<Parameter>& params,
                      float slope) {
  for (const auto& block : blocks) x = run_block(block, x, params, slope);
  return x;
}

}  // namespace

FeatureMap residual_block(const Model& model, const Model::Block& block, const FeatureMap& x) {
  if (!model.initialized()) throw std::logic_error("model weights not initialised");
  return run_block(block, x, model.params_, static_cast<float>(model.config_.leaky_slope));
}

const Model::Block& first_encoder_block(const Model& model, int level) {
  if (level < 0 || level >= model.config_.levels()) throw std::out_of_range("encoder level out of range");
  return model.encoder_[level].blocks.front();
}

std::vector<NetworkOutput> Model::forward(const RealTensor& magnitude, const ForwardOptions& options) const {
  if (!initialized()) throw std::logic_error("model weights not initialised");
  if (static_cast<int>(magnitude.channels()) != config_.in_channels)
    throw std::invalid_argument("forward: expected " + std::to_string(config_.in_channels) + " input channels, got " +
                                std::to_string(magnitude.channels()));
  const int frames = static_cast<int>(magnitude.frames());
  const int bins = static_cast<int>(magnitude.bins());
  if (frames < 1 || bins < 1) throw std::invalid_argument("forward: empty input");
  const int levels = config_.levels();
  const int unit = 1 << levels;
  const int height = (frames + unit - 1) / unit * unit;
  const int width = (bins + unit - 1) / unit * unit;
  const float slope = static_cast<float>(config_.leaky_slope);

  FeatureMap x(config_.in_channels, height, width);
  for (int c = 0; c < config_.in_channels; ++c) {
    float* dst = x.plane(c);
    for (int t = 0; t < frames; ++t) {
      const double* src = magnitude.frame(c, t);
      for (int f = 0; f < bins; ++f) dst[t * width + f] = static_cast<float>(src[f]);
    }
  }

  FeatureMap h = conv2d(x, stem_, params_);
  leaky_relu(h, slope);
  std::vector<FeatureMap> skips;
  for (int i = 0; i < levels; ++i) {
    h = run_blocks(encoder_[i].blocks, std::move(h), params_, slope);
    skips.push_back(h);
    h = average_pool(h);
  }
  h = run_blocks(bottleneck_, std::move(h), params_, slope);
  for (int i = levels - 1; i >= 0; --i) {
    FeatureMap up = conv2d(upsample_nearest(h), decoder_[i].up, params_);
    leaky_relu(up, slope);
    FeatureMap& skip = skips[i];
    if (options.ablate_skip_level == i) std::fill(skip.data.begin(), skip.data.end(), 0.0f);
    h = run_blocks(decoder_[i].blocks, concat(up, skip), params_, slope);
  }
  const FeatureMap out = conv2d(h, head_, params_);

  const int in = config_.in_channels;
  std::vector<NetworkOutput> result;
  for (int s = 0; s < config_.out_sources; ++s) {
    NetworkOutput o(in, frames, bins);
    RealTensor* heads[4] = {&o.mask_logits, &o.phase_real, &o.phase_imag, &o.mag_residual};
    for (int q = 0; q < 4; ++q) {
      for (int c = 0; c < in; ++c) {
        const float* src = out.plane((s * 4 + q) * in + c);
        for (int t = 0; t < frames; ++t) {
          double* dst = heads[q]->frame(c, t);
          for (int f = 0; f < bins; ++f) dst[f] = src[t * width + f];
        }
      }
    }
    result.push_back(std::move(o));
  }
  return result;
}

}  // namespace cws
