#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cws/cirm.hpp"
#include "cws/tensor.hpp"

namespace cws {

// Symmetric residual UNet. Level i of the encoder runs encoder_blocks[i]
// residual blocks at channels_per_level[i] and then 2x2 average pooling; the
// bottleneck runs at bottleneck_channels; decoder level i upsamples
// (nearest x2 + 3x3 conv), concatenates the level-i skip and runs
// decoder_blocks[i] blocks. Kernels are 3x3, shortcuts 1x1 where the channel
// count changes.
struct ModelConfig {
  int in_channels = 8;
  int out_sources = 1;
  std::vector<int> channels_per_level;
  int bottleneck_channels = 0;
  std::vector<int> encoder_blocks;
  std::vector<int> decoder_blocks;
  int bottleneck_blocks = 1;
  double leaky_slope = 0.01;
  // When > 0, build() checks that the conv count matches.
  int target_layer_count = 0;

  int levels() const { return static_cast<int>(channels_per_level.size()); }
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  // FNV-1a 64 of the canonical JSON, as 16 hex digits.
  std::string hash() const;
};

// "tiny", "vocals-276", "other-166".
ModelConfig preset(std::string_view name);
std::vector<std::string> preset_names();

struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;  // empty until initialised or loaded

  std::size_t element_count() const;
};

// Float feature map [channels x height x width] used inside forward().
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w) {}
  float* plane(int c) { return data.data() + static_cast<std::size_t>(c) * height * width; }
  const float* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * height * width; }
};

struct ForwardOptions {
  // Zero the skip tensor of this encoder level before concatenation (-1: none).
  int ablate_skip_level = -1;
};

class Model {
 public:
  // Lays out the parameter table (shapes only).
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  bool initialized() const;

  // Conv layers in the model, counting shortcuts and the head.
  int count_layers() const;
  std::size_t parameter_count() const;

  void initialize_zero();
  // Variance-scaled uniform weights, zero biases, from a fixed seed.
  void initialize_random(std::uint64_t seed);

  // magnitude: [in_channels x T x F]. Returns out_sources outputs of the same
  // shape. Input is zero-padded to multiples of 2^levels on both axes and the
  // result cropped back.
  std::vector<NetworkOutput> forward(const RealTensor& magnitude, const ForwardOptions& options = {}) const;

  struct Conv {
    int in = 0;
    int out = 0;
    int kernel = 3;
    int weight = -1;  // parameter index
    int bias = -1;    // parameter index, -1 if bias-free
  };
  struct Block {
    Conv first;
    Conv second;
    bool has_shortcut = false;
    Conv shortcut;
  };
  struct EncoderLevel {
    std::vector<Block> blocks;
  };
  struct DecoderLevel {
    Conv up;
    std::vector<Block> blocks;
  };

 private:
  Conv add_conv(const std::string& name, int in, int out, int kernel, bool bias);
  std::vector<Block> add_blocks(const std::string& prefix, int in, int out, int count);

  ModelConfig config_;
  std::vector<Parameter> params_;
  Conv stem_;
  std::vector<EncoderLevel> encoder_;
  std::vector<Block> bottleneck_;
  std::vector<DecoderLevel> decoder_;  // decoder_[i] produces level i
  Conv head_;

  friend FeatureMap residual_block(const Model& model, const Model::Block& block, const FeatureMap& x);
  friend const Model::Block& first_encoder_block(const Model& model, int level);
};

// Residual block on its own, for unit tests of the block contract.
FeatureMap residual_block(const Model& model, const Model::Block& block, const FeatureMap& x);
const Model::Block& first_encoder_block(const Model& model, int level);

// Weight store: ordered named f32 tensors plus the config they belong to.
struct TensorRecord {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

struct WeightStore {
  std::string config_hash;
  int out_sources = 0;
  std::string config_json;  // ModelConfig::to_json() of the producing model
  std::vector<TensorRecord> tensors;
};

class WeightStoreError : public std::runtime_error {
 public:
  WeightStoreError(const std::string& what, std::vector<std::string> names = {})
      : std::runtime_error(what), names_(std::move(names)) {}
  // Offending tensor names, when the failure is about specific tensors.
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

WeightStore save_weights(const Model& model);
// Throws WeightStoreError on config-hash mismatch or on missing, unexpected or
// wrongly shaped tensors (all offenders listed).
void load_weights(Model& model, const WeightStore& store);

// Binary layout: "CWSW", u32 version = 1, u64 header length, JSON header
// {config_hash, out_sources, config, tensors: [{name, shape, dtype, offset}]},
// then little-endian f32 data, row-major, in header order. Offsets are bytes
// from the start of the data section.
void write_weight_file(const WeightStore& store, const std::filesystem::path& path);
WeightStore read_weight_file(const std::filesystem::path& path);
std::vector<unsigned char> encode_weight_store(const WeightStore& store);
WeightStore decode_weight_store(const std::vector<unsigned char>& bytes);

// Builds the model described by the file's config and loads its tensors.
Model load_model(const std::filesystem::path& path);

}  // namespace cws
