#include <algorithm>
#include <cstring>
#include <fstream>

#include "cws/resunet.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cws;

namespace {

Model tiny_random(std::uint64_t seed) {
  Model m(preset("tiny"));
  m.initialize_random(seed);
  return m;
}

bool contains(const std::vector<std::string>& names, const std::string& n) {
  return std::find(names.begin(), names.end(), n) != names.end();
}

std::vector<std::string> load_error_names(Model& model, const WeightStore& store) {
  try {
    load_weights(model, store);
  } catch (const WeightStoreError& e) {
    return e.names();
  }
  FAIL("expected WeightStoreError");
  return {};
}

void replace_all(std::vector<unsigned char>& bytes, const std::string& from, const std::string& to) {
  REQUIRE(from.size() == to.size());
  auto it = bytes.begin();
  while ((it = std::search(it, bytes.end(), from.begin(), from.end())) != bytes.end()) {
    std::copy(to.begin(), to.end(), it);
    it += static_cast<std::ptrdiff_t>(from.size());
  }
}

}  // namespace

TEST_CASE("save and load round trip is bit-identical") {
  const Model source = tiny_random(1);
  const WeightStore store = save_weights(source);
  const auto bytes = encode_weight_store(store);
  CHECK(std::equal(bytes.begin(), bytes.begin() + 4, "CWSW"));

  Model target(preset("tiny"));
  load_weights(target, decode_weight_store(bytes));
  REQUIRE(target.initialized());
  for (std::size_t i = 0; i < source.parameters().size(); ++i) {
    const auto& a = source.parameters()[i].values;
    const auto& b = target.parameters()[i].values;
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  }
  CHECK(encode_weight_store(save_weights(target)) == bytes);
}

TEST_CASE("weight files round trip through disk") {
  testing::TempDir dir;
  const Model source = tiny_random(2);
  write_weight_file(save_weights(source), dir / "w.cwsw");
  const WeightStore back = read_weight_file(dir / "w.cwsw");
  CHECK(back.config_hash == source.config().hash());
  CHECK(back.out_sources == 1);
  CHECK(encode_weight_store(back) == encode_weight_store(save_weights(source)));

  const Model loaded = load_model(dir / "w.cwsw");
  CHECK(loaded.config().to_json() == source.config().to_json());
  const RealTensor x(8, 16, 257, 0.5);
  CHECK(loaded.forward(x)[0].mask_logits.data() == source.forward(x)[0].mask_logits.data());
}

TEST_CASE("header records shapes, dtype and offsets") {
  const WeightStore store = save_weights(tiny_random(3));
  const auto bytes = encode_weight_store(store);
  std::uint64_t header_length = 0;
  std::memcpy(&header_length, bytes.data() + 8, 8);
  const std::string header(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_length));
  CHECK(header.find("\"dtype\":\"f32\"") != std::string::npos);
  CHECK(header.find("\"config_hash\":\"" + store.config_hash + "\"") != std::string::npos);
  std::size_t floats = 0;
  for (const auto& t : store.tensors) floats += t.values.size();
  CHECK(bytes.size() == 16 + header_length + floats * sizeof(float));
  // First tensor's data starts right after the header.
  CHECK(std::memcmp(bytes.data() + 16 + header_length, store.tensors[0].values.data(), 4) == 0);
}

TEST_CASE("config mismatch is reported before tensor checks") {
  WeightStore store;
  store.config_hash = preset("vocals-276").hash();
  store.out_sources = 1;
  Model other(preset("other-166"));
  try {
    load_weights(other, store);
    FAIL("expected WeightStoreError");
  } catch (const WeightStoreError& e) {
    CHECK(std::string(e.what()).find("config hash mismatch") != std::string::npos);
  }
}

TEST_CASE("renamed and reshaped tensors are named") {
  WeightStore store = save_weights(tiny_random(4));
  Model target(preset("tiny"));

  WeightStore renamed = store;
  renamed.tensors[2].name = "encoder.0.block.0.convX.weight";
  const auto names = load_error_names(target, renamed);
  CHECK(contains(names, store.tensors[2].name));
  CHECK(contains(names, "encoder.0.block.0.convX.weight"));

  WeightStore reshaped = store;
  reshaped.tensors.back().shape = {16, 8, 3, 3};
  reshaped.tensors.back().values.resize(16 * 8 * 9);
  CHECK(load_error_names(target, reshaped) == std::vector<std::string>{"head.weight"});

  WeightStore missing = store;
  missing.tensors.erase(missing.tensors.begin());
  CHECK(load_error_names(target, missing) == std::vector<std::string>{"stem.weight"});

  WeightStore extra = store;
  extra.tensors.push_back({"spare.weight", {1}, {0.0f}});
  CHECK(load_error_names(target, extra) == std::vector<std::string>{"spare.weight"});
  CHECK_FALSE(target.initialized());
}

TEST_CASE("corrupted bytes are detected") {
  const auto bytes = encode_weight_store(save_weights(tiny_random(5)));
  Model target(preset("tiny"));

  auto renamed = bytes;
  replace_all(renamed, "\"head.weight\"", "\"head.wexght\"");
  const auto names = load_error_names(target, decode_weight_store(renamed));
  CHECK(contains(names, "head.weight"));
  CHECK(contains(names, "head.wexght"));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_weight_store(bad_magic), WeightStoreError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_weight_store(bad_version), WeightStoreError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 4);
  try {
    decode_weight_store(truncated);
    FAIL("expected WeightStoreError");
  } catch (const WeightStoreError& e) {
    CHECK(e.names() == std::vector<std::string>{"head.weight"});
  }
  CHECK_THROWS_AS(decode_weight_store({'C', 'W', 'S'}), WeightStoreError);
}

TEST_CASE("source count must match") {
  WeightStore store = save_weights(tiny_random(6));
  store.out_sources = 4;
  Model target(preset("tiny"));
  CHECK_THROWS_AS(load_weights(target, store), WeightStoreError);
  CHECK_THROWS_AS(save_weights(Model(preset("tiny"))), WeightStoreError);
  CHECK_THROWS_AS(read_weight_file("/nonexistent/w.cwsw"), WeightStoreError);
}
