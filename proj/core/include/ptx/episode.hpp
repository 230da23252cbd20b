#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ptx/tensor.hpp"

namespace ptx {

/// A labelled image collection episodes are drawn from.
class FewShotDataset {
 public:
  virtual ~FewShotDataset() = default;
  virtual std::size_t class_count() const = 0;
  virtual std::size_t sample_count(std::size_t cls) const = 0;
  virtual std::size_t pixels() const = 0;
  /// Pixel values in [0, 1]. Must be safe to call concurrently.
  virtual Vec image(std::size_t cls, std::size_t sample) const = 0;
};

/// Gaussian class prototypes: prototype entries ~ U(0, 1), samples are the
/// prototype plus N(0, noise^2) pixel noise, clamped to [0, 1]. Images are
/// generated on demand from the seed, so the dataset holds no pixel data.
class SyntheticDataset final : public FewShotDataset {
 public:
  SyntheticDataset(std::size_t classes, std::size_t samples_per_class, std::size_t pixels = 16, double noise = 0.1,
                   std::uint64_t seed = 0);

  std::size_t class_count() const override { return classes_; }
  std::size_t sample_count(std::size_t) const override { return samples_; }
  std::size_t pixels() const override { return pixels_; }
  Vec image(std::size_t cls, std::size_t sample) const override;
  Vec prototype(std::size_t cls) const;

 private:
  std::size_t classes_, samples_, pixels_;
  double noise_;
  std::uint64_t seed_;
};

struct SupportItem {
  Vec image;
  std::size_t label = 0;  // episode-local
};

struct Episode {
  std::size_t ways = 0;
  std::size_t shots = 0;
  std::vector<SupportItem> support;  // ways * shots, presentation order
  Vec query_image;
  std::size_t query_label = 0;
  std::uint64_t seed = 0;
  /// Dataset class drawn at position i and the episode-local label it received.
  std::vector<std::size_t> classes;
  std::vector<std::size_t> label_of_position;
};

/// Draws `ways` distinct classes with at least shots + 1 samples, assigns a
/// random permutation of labels 0..ways-1, K support samples per class plus
/// one query from a random chosen class, and shuffles the support order.
/// Deterministic in seed. Throws std::invalid_argument if the dataset is too small.
Episode sample_episode(const FewShotDataset& dataset, std::size_t ways, std::size_t shots, std::uint64_t seed);

struct EpisodeToken {
  Vec pixels;
  Vec label_onehot;  // all zero for the query
  double query_marker = 0.0;

  /// pixels ++ label_onehot ++ [query_marker]
  Vec input() const;
};

/// Support tokens in presentation order, then the query token.
std::vector<EpisodeToken> tokenize(const Episode& episode);
std::vector<Vec> episode_inputs(const Episode& episode);

}  // namespace ptx
