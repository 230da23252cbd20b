#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ptx/model.hpp"

namespace ptx {

// PTXF container layout (all integers little-endian):
//   bytes 0-3   magic "PTXF"
//   byte  4     version (1)
//   bytes 5-8   u32 header length H
//   H bytes     JSON header: {"kind", "config", "tensors": [{name, shape, dtype, scale_exp}], "meta"}
//   blobs       raw tensor data, concatenated in manifest order

inline constexpr std::string_view kCheckpointMagic = "PTXF";
inline constexpr std::uint8_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, BadVersion, Truncated, BadHeader, Manifest };
  CheckpointError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class ElementType { Float32, Int8, Int16 };

std::string_view element_type_name(ElementType t);
std::size_t element_size(ElementType t);

/// Integer tensors hold values code * 2^scale_exponent.
struct ContainerTensor {
  std::string name;
  std::vector<std::size_t> shape;
  ElementType dtype = ElementType::Float32;
  int scale_exponent = 0;
  std::vector<double> values;
};

struct Container {
  std::string kind = "model";
  ModelConfig config;
  std::vector<ContainerTensor> tensors;
  /// Free-form JSON object text.
  std::string meta = "{}";
};

/// Throws std::invalid_argument if an integer tensor value is not an in-range code.
std::vector<std::uint8_t> write_container(const Container& container);
/// Throws CheckpointError on malformed input; never returns a partial container.
Container read_container(std::span<const std::uint8_t> bytes);
/// SHA-256 over the blob section of a serialized container.
std::string blob_digest(std::span<const std::uint8_t> bytes);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(std::string_view text);
/// SHA-256 of the canonical (key-sorted) config JSON.
std::string config_digest(const ModelConfig& config);

struct LoadedModel {
  Model model;
  std::string blob_digest;
  std::string config_digest;
  std::vector<ContainerTensor> manifest;  // values cleared
};

/// Tensors listed in model.tensor_formats are written as int8/int16 codes,
/// everything else as float32.
std::vector<std::uint8_t> serialize_model(const Model& model);
/// Strict: every expected tensor present with the config-derived shape, no unknown names.
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const Model& model, const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ptx
