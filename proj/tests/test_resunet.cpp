#include <cmath>
#include <random>
#include <set>

#include "cws/resunet.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cws;

namespace {

RealTensor random_magnitude(std::size_t channels, std::size_t frames, std::size_t bins, std::uint64_t seed) {
  RealTensor t(channels, frames, bins);
  const auto v = testing::uniform_vector(t.size(), seed, 0.0, 2.0);
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

// Conv count by the counting rule, computed from the config alone.
int expected_layers(const ModelConfig& c) {
  int layers = 2;  // stem, head
  int current = c.channels_per_level[0];
  for (int i = 0; i < c.levels(); ++i) {
    layers += 2 * c.encoder_blocks[i] + (current != c.channels_per_level[i]);
    current = c.channels_per_level[i];
  }
  layers += 2 * c.bottleneck_blocks + (current != c.bottleneck_channels);
  for (int i = 0; i < c.levels(); ++i) layers += 1 + 2 * c.decoder_blocks[i] + 1;  // up, blocks, 2c -> c shortcut
  return layers;
}

// Zero-padded 3x3 (or 1x1) convolution straight from the definition.
FeatureMap conv_oracle(const FeatureMap& x, const Parameter& w, const Parameter* b) {
  const int out = static_cast<int>(w.shape[0]), in = static_cast<int>(w.shape[1]), k = static_cast<int>(w.shape[2]);
  FeatureMap y(out, x.height, x.width);
  for (int o = 0; o < out; ++o)
    for (int r = 0; r < x.height; ++r)
      for (int q = 0; q < x.width; ++q) {
        double acc = b ? b->values[o] : 0.0;
        for (int i = 0; i < in; ++i)
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int rr = r + dy - k / 2, qq = q + dx - k / 2;
              if (rr < 0 || rr >= x.height || qq < 0 || qq >= x.width) continue;
              acc += w.values[((o * in + i) * k + dy) * k + dx] * x.plane(i)[rr * x.width + qq];
            }
        y.plane(o)[r * x.width + q] = static_cast<float>(acc);
      }
  return y;
}

FeatureMap random_feature(int c, int h, int w, std::uint64_t seed) {
  FeatureMap f(c, h, w);
  const auto v = testing::uniform_vector(f.data.size(), seed);
  std::transform(v.begin(), v.end(), f.data.begin(), [](double d) { return static_cast<float>(d); });
  return f;
}

}  // namespace

TEST_CASE("presets count their conv layers") {
  for (const auto& name : preset_names()) {
    const Model model(preset(name));
    CHECK(model.count_layers() == expected_layers(model.config()));
  }
  CHECK(Model(preset("vocals-276")).count_layers() == 276);
  CHECK(Model(preset("other-166")).count_layers() == 166);
  const Model tiny(preset("tiny"));
  CHECK(tiny.config().levels() == 2);
  CHECK(tiny.config().channels_per_level == std::vector<int>{4, 4});
  CHECK_THROWS_AS(preset("huge"), std::invalid_argument);
}

TEST_CASE("config validation and target layer count") {
  ModelConfig c = preset("tiny");
  c.target_layer_count = 17;
  CHECK_THROWS_AS(Model{c}, std::invalid_argument);
  c = preset("tiny");
  c.encoder_blocks = {1};
  CHECK_THROWS_AS(Model{c}, std::invalid_argument);
  c = preset("tiny");
  c.leaky_slope = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("config JSON and hash") {
  const ModelConfig v = preset("vocals-276");
  const ModelConfig back = ModelConfig::from_json(v.to_json());
  CHECK(back.to_json() == v.to_json());
  CHECK(back.hash() == v.hash());
  CHECK(v.hash().size() == 16);
  CHECK(v.hash() != preset("other-166").hash());
  ModelConfig two = preset("tiny");
  two.out_sources = 4;
  CHECK(two.hash() != preset("tiny").hash());
  CHECK_THROWS_AS(ModelConfig::from_json("{}"), std::invalid_argument);
}

TEST_CASE("parameter table layout") {
  const Model model(preset("tiny"));
  CHECK_FALSE(model.initialized());
  std::set<std::string> names;
  for (const auto& p : model.parameters()) CHECK(names.insert(p.name).second);
  CHECK(names.count("stem.weight"));
  CHECK(names.count("stem.bias"));
  CHECK(names.count("encoder.0.block.0.conv1.weight"));
  CHECK(names.count("bottleneck.block.0.conv2.bias"));
  CHECK(names.count("decoder.1.up.weight"));
  CHECK(names.count("decoder.0.block.0.shortcut.weight"));
  CHECK(names.count("head.weight"));
  CHECK_FALSE(names.count("head.bias"));
  const Parameter& head = model.parameters().back();
  CHECK(head.shape == std::vector<std::size_t>{32, 4, 3, 3});
  CHECK(Model(preset("tiny")).parameters().size() == model.parameters().size());
}

TEST_CASE("zero weights map zero input to zero outputs") {
  Model model(preset("tiny"));
  model.initialize_zero();
  const auto outs = model.forward(RealTensor(8, 37, 257));
  REQUIRE(outs.size() == 1);
  for (const RealTensor* t : {&outs[0].mask_logits, &outs[0].phase_real, &outs[0].phase_imag, &outs[0].mag_residual}) {
    CHECK(t->channels() == 8);
    CHECK(t->frames() == 37);
    CHECK(t->bins() == 257);
    CHECK(std::all_of(t->data().begin(), t->data().end(), [](double v) { return v == 0.0; }));
  }
}

TEST_CASE("output shape follows input shape for random frame counts") {
  Model model(preset("tiny"));
  model.initialize_random(3);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> frames(16, 400);
  for (int trial = 0; trial < 6; ++trial) {
    const int t = frames(rng);
    const auto outs = model.forward(random_magnitude(8, t, 257, trial));
    REQUIRE(outs.size() == 1);
    CHECK(outs[0].mask_logits.frames() == static_cast<std::size_t>(t));
    CHECK(outs[0].mag_residual.bins() == 257);
    outs[0].validate();
  }
}

TEST_CASE("frames far from the end do not depend on a longer clip") {
  Model model(preset("tiny"));
  model.initialize_random(11);
  const std::size_t t = 128, kept = 32;
  const RealTensor head = random_magnitude(8, t, 257, 12);
  const RealTensor tail = random_magnitude(8, t, 257, 13);
  RealTensor longer(8, 2 * t, 257);
  for (std::size_t c = 0; c < 8; ++c)
    for (std::size_t f = 0; f < 2 * t; ++f)
      for (std::size_t k = 0; k < 257; ++k) longer(c, f, k) = f < t ? head(c, f, k) : tail(c, f - t, k);

  const auto a = model.forward(head), b = model.forward(longer);
  REQUIRE(b[0].mask_logits.frames() == 2 * t);
  double worst = 0.0;
  for (const auto field : {&NetworkOutput::mask_logits, &NetworkOutput::phase_real, &NetworkOutput::phase_imag,
                           &NetworkOutput::mag_residual})
    for (std::size_t c = 0; c < 8; ++c)
      for (std::size_t f = 0; f < kept; ++f)
        for (std::size_t k = 0; k < 257; ++k)
          worst = std::max(worst, std::abs((a[0].*field)(c, f, k) - (b[0].*field)(c, f, k)));
  CHECK(worst <= 1e-4);
}

TEST_CASE("multi-source head splits into one output per source") {
  ModelConfig c = preset("tiny");
  c.out_sources = 4;
  Model model(c);
  model.initialize_random(5);
  const auto outs = model.forward(random_magnitude(8, 20, 257, 1));
  CHECK(outs.size() == 4);
  CHECK(outs[0].mask_logits.data() != outs[3].mask_logits.data());
}

TEST_CASE("forward is deterministic") {
  Model model(preset("tiny"));
  model.initialize_random(7);
  const RealTensor x = random_magnitude(8, 50, 257, 8);
  const auto a = model.forward(x), b = model.forward(x);
  CHECK(a[0].mask_logits.data() == b[0].mask_logits.data());
  CHECK(a[0].phase_real.data() == b[0].phase_real.data());
  CHECK(a[0].phase_imag.data() == b[0].phase_imag.data());
  CHECK(a[0].mag_residual.data() == b[0].mag_residual.data());

  Model again(preset("tiny"));
  again.initialize_random(7);
  CHECK(again.forward(x)[0].mask_logits.data() == a[0].mask_logits.data());
}

TEST_CASE("ablating a skip connection changes the output") {
  Model model(preset("tiny"));
  model.initialize_random(11);
  const RealTensor x = random_magnitude(8, 32, 257, 12);
  const auto ref = model.forward(x);
  for (int level = 0; level < model.config().levels(); ++level) {
    const auto ablated = model.forward(x, {level});
    double diff = 0.0;
    for (std::size_t i = 0; i < ref[0].mask_logits.size(); ++i)
      diff = std::max(diff, std::abs(ref[0].mask_logits.data()[i] - ablated[0].mask_logits.data()[i]));
    CHECK_MESSAGE(diff > 1e-6, "level ", level);
  }
}

TEST_CASE("residual block with zero convs is the identity") {
  Model model(preset("tiny"));
  model.initialize_zero();
  const Model::Block& block = first_encoder_block(model, 0);
  CHECK_FALSE(block.has_shortcut);
  const FeatureMap x = random_feature(4, 9, 13, 1);
  CHECK(residual_block(model, block, x).data == x.data);

  // Random first conv, zero second conv: still the identity.
  model.initialize_random(2);
  std::fill(model.parameters()[block.second.weight].values.begin(), model.parameters()[block.second.weight].values.end(), 0.0f);
  std::fill(model.parameters()[block.second.bias].values.begin(), model.parameters()[block.second.bias].values.end(), 0.0f);
  CHECK(residual_block(model, block, x).data == x.data);
  CHECK_THROWS_AS(first_encoder_block(model, 2), std::out_of_range);
}

TEST_CASE("residual block matches a direct evaluation") {
  ModelConfig c = preset("tiny");
  c.channels_per_level = {3, 5};
  Model model(c);
  model.initialize_random(21);
  for (auto& p : model.parameters())
    if (p.name.ends_with(".bias"))
      for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = 0.01f * static_cast<float>(i + 1);
  const auto& params = model.parameters();
  const float slope = static_cast<float>(c.leaky_slope);

  for (int level : {0, 1}) {
    const Model::Block& block = first_encoder_block(model, level);
    CHECK(block.has_shortcut == (level == 1));
    const FeatureMap x = random_feature(block.first.in, 7, 11, 5 + level);
    FeatureMap mid = conv_oracle(x, params[block.first.weight], &params[block.first.bias]);
    for (float& v : mid.data) v = v < 0.0f ? v * slope : v;
    FeatureMap expect = conv_oracle(mid, params[block.second.weight], &params[block.second.bias]);
    const FeatureMap skip = block.has_shortcut ? conv_oracle(x, params[block.shortcut.weight], nullptr) : x;
    for (std::size_t i = 0; i < expect.data.size(); ++i) expect.data[i] += skip.data[i];

    const FeatureMap got = residual_block(model, block, x);
    double err = 0.0;
    for (std::size_t i = 0; i < got.data.size(); ++i) err = std::max(err, double(std::abs(got.data[i] - expect.data[i])));
    CHECK(err < 1e-5);
  }
}

TEST_CASE("forward preconditions") {
  Model model(preset("tiny"));
  CHECK_THROWS_AS(model.forward(RealTensor(8, 16, 257)), std::logic_error);
  model.initialize_zero();
  CHECK_THROWS_AS(model.forward(RealTensor(4, 16, 257)), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(RealTensor(8, 0, 257)), std::invalid_argument);
}
