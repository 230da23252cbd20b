#include "ptx/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "ptx/digest.hpp"
#include "ptx/quant.hpp"

namespace ptx {

using nlohmann::json;

namespace {

constexpr std::size_t kPreambleSize = 9;

json spec_to_json(const QuantSpec& s) { return {{"bits", s.bits}, {"signed", s.is_signed}, {"exponent", s.exponent}}; }

QuantSpec spec_from_json(const json& j) {
  return QuantSpec{j.at("bits").get<int>(), j.at("signed").get<bool>(), j.at("exponent").get<int>()};
}

json config_json(const ModelConfig& c) {
  return {
      {"layers", c.layers},
      {"dim", c.dim},
      {"heads", c.heads},
      {"window", c.window},
      {"max_seq_len", c.max_seq_len},
      {"pixels", c.pixels},
      {"classes", c.classes},
      {"scaled_attention", c.scaled_attention},
      {"final_norm", c.final_norm},
      {"encoder_relu", c.encoder_relu},
      {"rms_eps", c.rms_eps},
      {"quant",
       {{"matrix_bits", c.quant.matrix_bits},
        {"vector_bits", c.quant.vector_bits},
        {"activation", spec_to_json(c.quant.activation)},
        {"keys", spec_to_json(c.quant.keys)},
        {"values", spec_to_json(c.quant.values)},
        {"probs", spec_to_json(c.quant.probs)},
        {"traces", spec_to_json(c.quant.traces)}}},
  };
}

ModelConfig config_from(const json& j) {
  static const std::set<std::string> known{"layers",      "dim",     "heads",   "window",           "max_seq_len",
                                           "pixels",      "classes", "rms_eps", "scaled_attention", "final_norm",
                                           "encoder_relu", "quant"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  ModelConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.pixels = j.at("pixels").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.scaled_attention = j.value("scaled_attention", false);
  c.final_norm = j.value("final_norm", false);
  c.encoder_relu = j.value("encoder_relu", true);
  c.rms_eps = j.value("rms_eps", kDefaultRmsEps);
  if (j.contains("quant")) {
    const auto& q = j.at("quant");
    c.quant.matrix_bits = q.value("matrix_bits", c.quant.matrix_bits);
    c.quant.vector_bits = q.value("vector_bits", c.quant.vector_bits);
    if (q.contains("activation")) c.quant.activation = spec_from_json(q.at("activation"));
    if (q.contains("keys")) c.quant.keys = spec_from_json(q.at("keys"));
    if (q.contains("values")) c.quant.values = spec_from_json(q.at("values"));
    if (q.contains("probs")) c.quant.probs = spec_from_json(q.at("probs"));
    if (q.contains("traces")) c.quant.traces = spec_from_json(q.at("traces"));
  }
  c.validate();
  return c;
}

ElementType element_type_from(std::string_view name) {
  if (name == "float32") return ElementType::Float32;
  if (name == "int8") return ElementType::Int8;
  if (name == "int16") return ElementType::Int16;
  throw CheckpointError(CheckpointError::Kind::Manifest, "unknown element type '" + std::string(name) + "'");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::int64_t integer_code(double value, int exponent, ElementType t, const std::string& name) {
  const double scaled = std::ldexp(value, -exponent);
  const double lo = t == ElementType::Int8 ? -128.0 : -32768.0;
  const double hi = t == ElementType::Int8 ? 127.0 : 32767.0;
  if (scaled != std::floor(scaled) || scaled < lo || scaled > hi) {
    throw std::invalid_argument("tensor " + name + ": value " + std::to_string(value) +
                                " is not a representable code at exponent " + std::to_string(exponent));
  }
  return static_cast<std::int64_t>(scaled);
}

void encode_blob(const ContainerTensor& t, std::vector<std::uint8_t>& out) {
  for (double v : t.values) {
    switch (t.dtype) {
      case ElementType::Float32:
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        break;
      case ElementType::Int8:
        out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(integer_code(v, t.scale_exponent, t.dtype, t.name))));
        break;
      case ElementType::Int16: {
        const auto code = static_cast<std::uint16_t>(static_cast<std::int16_t>(integer_code(v, t.scale_exponent, t.dtype, t.name)));
        out.push_back(static_cast<std::uint8_t>(code & 0xFF));
        out.push_back(static_cast<std::uint8_t>(code >> 8));
        break;
      }
    }
  }
}

std::vector<double> decode_blob(const std::uint8_t* p, std::size_t count, ElementType t, int exponent) {
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    switch (t) {
      case ElementType::Float32:
        values[i] = static_cast<double>(std::bit_cast<float>(get_u32(p + 4 * i)));
        break;
      case ElementType::Int8:
        values[i] = std::ldexp(static_cast<double>(static_cast<std::int8_t>(p[i])), exponent);
        break;
      case ElementType::Int16: {
        const auto code = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
        values[i] = std::ldexp(static_cast<double>(static_cast<std::int16_t>(code)), exponent);
        break;
      }
    }
  }
  return values;
}

struct Parsed {
  json header;
  std::size_t blob_offset;
};

Parsed parse_preamble(std::span<const std::uint8_t> bytes) {
  using K = CheckpointError::Kind;
  if (bytes.size() < kPreambleSize) throw CheckpointError(K::Truncated, "checkpoint truncated: missing preamble");
  if (std::memcmp(bytes.data(), kCheckpointMagic.data(), 4) != 0) throw CheckpointError(K::BadMagic, "not a PTXF checkpoint");
  if (bytes[4] != kCheckpointVersion) {
    throw CheckpointError(K::BadVersion, "unsupported checkpoint version " + std::to_string(bytes[4]));
  }
  const std::size_t header_len = get_u32(bytes.data() + 5);
  if (bytes.size() < kPreambleSize + header_len) throw CheckpointError(K::Truncated, "checkpoint truncated inside the header");
  const auto* begin = reinterpret_cast<const char*>(bytes.data() + kPreambleSize);
  json header = json::parse(begin, begin + header_len, nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw CheckpointError(K::BadHeader, "checkpoint header is not a JSON object");
  return {std::move(header), kPreambleSize + header_len};
}

}  // namespace

std::string_view element_type_name(ElementType t) {
  switch (t) {
    case ElementType::Float32: return "float32";
    case ElementType::Int8: return "int8";
    case ElementType::Int16: return "int16";
  }
  return "?";
}

std::size_t element_size(ElementType t) {
  switch (t) {
    case ElementType::Float32: return 4;
    case ElementType::Int8: return 1;
    case ElementType::Int16: return 2;
  }
  return 0;
}

std::vector<std::uint8_t> write_container(const Container& c) {
  json manifest = json::array();
  std::vector<std::uint8_t> blobs;
  for (const auto& t : c.tensors) {
    std::size_t n = 1;
    for (auto s : t.shape) n *= s;
    if (n != t.values.size()) throw std::invalid_argument("tensor " + t.name + ": shape does not match value count");
    manifest.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", element_type_name(t.dtype)}, {"scale_exp", t.scale_exponent}});
    encode_blob(t, blobs);
  }
  json meta = json::parse(c.meta, nullptr, false);
  if (meta.is_discarded() || !meta.is_object()) throw std::invalid_argument("container meta must be a JSON object");
  const json header = {{"kind", c.kind}, {"config", config_json(c.config)}, {"tensors", manifest}, {"meta", meta}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  out.push_back(kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blobs.begin(), blobs.end());
  return out;
}

Container read_container(std::span<const std::uint8_t> bytes) {
  using K = CheckpointError::Kind;
  const Parsed parsed = parse_preamble(bytes);
  const json& header = parsed.header;
  Container c;
  try {
    c.kind = header.at("kind").get<std::string>();
    c.config = config_from(header.at("config"));
    c.meta = header.contains("meta") ? header.at("meta").dump() : "{}";
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(K::BadHeader, std::string("checkpoint header: ") + e.what());
  }

  std::size_t offset = parsed.blob_offset;
  try {
    for (const auto& entry : header.at("tensors")) {
      ContainerTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      t.dtype = element_type_from(entry.at("dtype").get<std::string>());
      t.scale_exponent = entry.value("scale_exp", 0);
      std::size_t n = 1;
      for (auto s : t.shape) n *= s;
      const std::size_t len = n * element_size(t.dtype);
      if (bytes.size() < offset + len) throw CheckpointError(K::Truncated, "checkpoint truncated inside tensor " + t.name);
      t.values = decode_blob(bytes.data() + offset, n, t.dtype, t.scale_exponent);
      offset += len;
      c.tensors.push_back(std::move(t));
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(K::Manifest, std::string("checkpoint manifest: ") + e.what());
  }
  if (offset != bytes.size()) {
    throw CheckpointError(K::Manifest, std::to_string(bytes.size() - offset) + " trailing bytes after the last tensor");
  }
  return c;
}

std::string blob_digest(std::span<const std::uint8_t> bytes) {
  const Parsed parsed = parse_preamble(bytes);
  return sha256_hex(bytes.subspan(parsed.blob_offset));
}

std::string config_to_json(const ModelConfig& config) { return config_json(config).dump(); }

ModelConfig config_from_json(std::string_view text) { return config_from(json::parse(text)); }

std::string config_digest(const ModelConfig& config) { return sha256_hex(config_to_json(config)); }

std::vector<std::uint8_t> serialize_model(const Model& model) {
  model.validate();
  Container c;
  c.kind = "model";
  c.config = model.config;
  for (const auto& t : tensors(model)) {
    ContainerTensor ct{t.name, t.shape, ElementType::Float32, 0, std::vector<double>(t.values.begin(), t.values.end())};
    if (auto it = model.tensor_formats.find(t.name); it != model.tensor_formats.end()) {
      const QuantSpec& spec = it->second;
      if (spec.bits > 16 || !spec.is_signed) {
        throw std::invalid_argument("tensor " + t.name + ": only signed formats up to 16 bits can be stored");
      }
      ct.dtype = spec.bits <= 8 ? ElementType::Int8 : ElementType::Int16;
      ct.scale_exponent = spec.exponent;
    }
    c.tensors.push_back(std::move(ct));
  }
  return write_container(c);
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  using K = CheckpointError::Kind;
  Container c = read_container(bytes);
  if (c.kind != "model") throw CheckpointError(K::BadHeader, "container kind '" + c.kind + "' is not a model");

  Model model = zero_model(c.config);
  std::map<std::string, const ContainerTensor*> by_name;
  for (const auto& t : c.tensors) {
    if (!by_name.emplace(t.name, &t).second) throw CheckpointError(K::Manifest, "duplicate tensor " + t.name);
  }
  std::set<std::string> consumed;
  for (auto& view : tensors(model)) {
    const auto it = by_name.find(view.name);
    if (it == by_name.end()) throw CheckpointError(K::Manifest, "missing tensor " + view.name);
    const ContainerTensor& t = *it->second;
    if (t.shape != view.shape) throw CheckpointError(K::Manifest, "tensor " + view.name + " has the wrong shape");
    std::copy(t.values.begin(), t.values.end(), view.values.begin());
    if (t.dtype != ElementType::Float32) {
      const int width = t.dtype == ElementType::Int8 ? 8 : 16;
      const int configured = view.shape.size() == 2 ? c.config.quant.matrix_bits : c.config.quant.vector_bits;
      model.tensor_formats[view.name] = QuantSpec{std::min(width, configured), true, t.scale_exponent};
    }
    consumed.insert(view.name);
  }
  for (const auto& t : c.tensors) {
    if (!consumed.count(t.name)) throw CheckpointError(K::Manifest, "unknown tensor " + t.name);
  }
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(K::Manifest, e.what());
  }

  LoadedModel out;
  out.model = std::move(model);
  out.blob_digest = blob_digest(bytes);
  out.config_digest = config_digest(c.config);
  for (auto& t : c.tensors) {
    t.values.clear();
    out.manifest.push_back(std::move(t));
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void save_model(const Model& model, const std::filesystem::path& path) { write_file(path, serialize_model(model)); }

LoadedModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace ptx
