#pragma once

#include <cstddef>

#include "ptx/model.hpp"

namespace ptx {

/// Embedding layout of the matcher model.
struct MatcherLayout {
  std::size_t pixels = 0, classes = 0;
  std::size_t label_begin() const noexcept { return pixels; }
  std::size_t marker() const noexcept { return pixels + classes; }
  std::size_t constant() const noexcept { return pixels + classes + 1; }
  std::size_t answer_begin() const noexcept { return pixels + classes + 2; }
  std::size_t width() const noexcept { return pixels + 2 * classes + 2; }
};

/// tiny_config with the embedding widened to hold the matcher layout.
ModelConfig matcher_config(std::size_t ways, std::size_t shots, std::size_t pixels);

/// Hand-set weights that classify by attention: the query attends to the
/// support images most similar to it (centred dot product), is kept away from
/// itself by a large marker penalty, and copies their labels into answer
/// channels read by the head. Layers after the first are identity (zero
/// blocks). Requires heads == 1 and dim >= MatcherLayout::width().
Model matcher_model(const ModelConfig& config);

}  // namespace ptx
