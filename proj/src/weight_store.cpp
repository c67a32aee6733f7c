#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "cws/resunet.hpp"
#include "json.hpp"

namespace cws {

using json = nlohmann::json;

namespace {

constexpr unsigned char kMagic[4] = {'C', 'W', 'S', 'W'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "weight files are read and written little-endian");

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get(const std::vector<unsigned char>& in, std::size_t at) {
  T value;
  std::memcpy(&value, in.data() + at, sizeof(T));
  return value;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

std::string join(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

WeightStore save_weights(const Model& model) {
  if (!model.initialized()) throw WeightStoreError("cannot save weights of an uninitialised model");
  WeightStore store;
  store.config_hash = model.config().hash();
  store.out_sources = model.config().out_sources;
  store.config_json = model.config().to_json();
  for (const auto& p : model.parameters()) store.tensors.push_back({p.name, p.shape, p.values});
  return store;
}

void load_weights(Model& model, const WeightStore& store) {
  const std::string expected = model.config().hash();
  if (store.config_hash != expected)
    throw WeightStoreError("config hash mismatch: store has " + store.config_hash + ", model expects " + expected);
  if (store.out_sources != model.config().out_sources)
    throw WeightStoreError("source count mismatch: store has " + std::to_string(store.out_sources) +
                           ", model expects " + std::to_string(model.config().out_sources));

  std::map<std::string, const TensorRecord*> by_name;
  std::vector<std::string> duplicate;
  for (const auto& t : store.tensors)
    if (!by_name.emplace(t.name, &t).second) duplicate.push_back(t.name);
  if (!duplicate.empty()) throw WeightStoreError("duplicate tensors: " + join(duplicate), duplicate);

  std::vector<std::string> missing, bad_shape, unexpected;
  for (const auto& p : model.parameters()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      missing.push_back(p.name);
      continue;
    }
    const TensorRecord& t = *it->second;
    if (t.shape != p.shape || t.values.size() != p.element_count()) bad_shape.push_back(p.name);
    by_name.erase(it);
  }
  for (const auto& [name, _] : by_name) unexpected.push_back(name);

  std::string message;
  std::vector<std::string> offenders;
  auto report = [&](const char* what, const std::vector<std::string>& names) {
    if (names.empty()) return;
    message += (message.empty() ? "" : "; ") + std::string(what) + ": " + join(names);
    offenders.insert(offenders.end(), names.begin(), names.end());
  };
  report("missing tensors", missing);
  report("unexpected tensors", unexpected);
  report("shape mismatch", bad_shape);
  if (!offenders.empty()) throw WeightStoreError(message, offenders);

  std::map<std::string, const TensorRecord*> lookup;
  for (const auto& t : store.tensors) lookup[t.name] = &t;
  for (auto& p : model.parameters()) p.values = lookup.at(p.name)->values;
}

std::vector<unsigned char> encode_weight_store(const WeightStore& store) {
  json header;
  header["config_hash"] = store.config_hash;
  header["out_sources"] = store.out_sources;
  header["config"] = store.config_json.empty() ? json(nullptr) : json::parse(store.config_json);
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : store.tensors) {
    std::size_t count = 1;
    for (std::size_t d : t.shape) count *= d;
    if (count != t.values.size())
      throw WeightStoreError("tensor " + t.name + " has " + std::to_string(t.values.size()) +
                                 " values for shape " + shape_string(t.shape),
                             {t.name});
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f32"}, {"offset", offset}});
    offset += count * sizeof(float);
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& t : store.tensors) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.values.data());
    out.insert(out.end(), bytes, bytes + t.values.size() * sizeof(float));
  }
  return out;
}

WeightStore decode_weight_store(const std::vector<unsigned char>& bytes) {
  constexpr std::size_t prefix = 4 + 4 + 8;
  if (bytes.size() < prefix || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw WeightStoreError("not a weight file (bad magic)");
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kVersion) throw WeightStoreError("unsupported weight file version " + std::to_string(version));
  const auto header_length = get<std::uint64_t>(bytes, 8);
  if (header_length > bytes.size() - prefix) throw WeightStoreError("truncated weight file header");
  const std::size_t data_start = prefix + header_length;
  const std::size_t data_size = bytes.size() - data_start;

  WeightStore store;
  try {
    const json header = json::parse(bytes.begin() + prefix, bytes.begin() + static_cast<std::ptrdiff_t>(data_start));
    store.config_hash = header.at("config_hash").get<std::string>();
    store.out_sources = header.value("out_sources", 0);
    if (header.contains("config") && !header["config"].is_null()) store.config_json = header["config"].dump();
    for (const auto& entry : header.at("tensors")) {
      TensorRecord t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto dtype = entry.at("dtype").get<std::string>();
      if (dtype != "f32") throw WeightStoreError("tensor " + t.name + " has unsupported dtype " + dtype, {t.name});
      const auto offset = entry.at("offset").get<std::uint64_t>();
      std::size_t count = 1;
      for (std::size_t d : t.shape) count *= d;
      if (offset > data_size || count > (data_size - offset) / sizeof(float))
        throw WeightStoreError("tensor " + t.name + " extends past the end of the file", {t.name});
      t.values.resize(count);
      if (count) std::memcpy(t.values.data(), bytes.data() + data_start + offset, count * sizeof(float));
      store.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw WeightStoreError(std::string("malformed weight file header: ") + e.what());
  }
  return store;
}

void write_weight_file(const WeightStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_weight_store(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WeightStoreError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightStoreError("failed writing " + path.string());
}

WeightStore read_weight_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightStoreError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weight_store(bytes);
}

Model load_model(const std::filesystem::path& path) {
  const WeightStore store = read_weight_file(path);
  if (store.config_json.empty()) throw WeightStoreError(path.string() + ": weight file carries no model config");
  ModelConfig config;
  try {
    config = ModelConfig::from_json(store.config_json);
  } catch (const std::invalid_argument& e) {
    throw WeightStoreError(path.string() + ": " + e.what());
  }
  Model model(config);
  load_weights(model, store);
  return model;
}

}  // namespace cws
