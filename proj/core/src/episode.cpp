#include "ptx/episode.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ptx/random.hpp"

namespace ptx {

SyntheticDataset::SyntheticDataset(std::size_t classes, std::size_t samples_per_class, std::size_t pixels, double noise,
                                   std::uint64_t seed)
    : classes_(classes), samples_(samples_per_class), pixels_(pixels), noise_(noise), seed_(seed) {
  if (classes == 0 || samples_per_class == 0 || pixels == 0) {
    throw std::invalid_argument("SyntheticDataset: classes, samples and pixels must be positive");
  }
  if (!(noise >= 0.0)) throw std::invalid_argument("SyntheticDataset: noise must be non-negative");
}

Vec SyntheticDataset::prototype(std::size_t cls) const {
  if (cls >= classes_) throw std::out_of_range("SyntheticDataset: class index");
  Rng rng(derive_seed(seed_, cls));
  Vec p(pixels_);
  for (auto& v : p) v = rng.uniform();
  return p;
}

Vec SyntheticDataset::image(std::size_t cls, std::size_t sample) const {
  if (sample >= samples_) throw std::out_of_range("SyntheticDataset: sample index");
  Vec img = prototype(cls);
  Rng rng(derive_seed(derive_seed(seed_, cls), sample + 1));
  for (auto& v : img) v = std::clamp(v + noise_ * rng.normal(), 0.0, 1.0);
  return img;
}

Episode sample_episode(const FewShotDataset& dataset, std::size_t ways, std::size_t shots, std::uint64_t seed) {
  if (ways == 0 || shots == 0) throw std::invalid_argument("sample_episode: ways and shots must be positive");
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < dataset.class_count(); ++c) {
    if (dataset.sample_count(c) >= shots + 1) eligible.push_back(c);
  }
  if (eligible.size() < ways) {
    throw std::invalid_argument("sample_episode: need " + std::to_string(ways) + " classes with at least " +
                                std::to_string(shots + 1) + " samples, dataset has " + std::to_string(eligible.size()));
  }

  Rng rng(seed);
  Episode ep;
  ep.ways = ways;
  ep.shots = shots;
  ep.seed = seed;
  for (std::size_t i = 0; i < ways; ++i) {
    std::swap(eligible[i], eligible[i + rng.below(eligible.size() - i)]);
    ep.classes.push_back(eligible[i]);
  }
  ep.label_of_position.resize(ways);
  std::iota(ep.label_of_position.begin(), ep.label_of_position.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(ep.label_of_position));
  const std::size_t query_pos = rng.below(ways);

  for (std::size_t i = 0; i < ways; ++i) {
    const std::size_t cls = ep.classes[i];
    const std::size_t available = dataset.sample_count(cls);
    const std::size_t take = shots + (i == query_pos ? 1 : 0);
    std::vector<std::size_t> idx(available);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t s = 0; s < take; ++s) std::swap(idx[s], idx[s + rng.below(available - s)]);
    for (std::size_t s = 0; s < shots; ++s) ep.support.push_back({dataset.image(cls, idx[s]), ep.label_of_position[i]});
    if (i == query_pos) {
      ep.query_image = dataset.image(cls, idx[shots]);
      ep.query_label = ep.label_of_position[i];
    }
  }
  rng.shuffle(std::span<SupportItem>(ep.support));
  return ep;
}

Vec EpisodeToken::input() const {
  Vec v;
  v.reserve(pixels.size() + label_onehot.size() + 1);
  v.insert(v.end(), pixels.begin(), pixels.end());
  v.insert(v.end(), label_onehot.begin(), label_onehot.end());
  v.push_back(query_marker);
  return v;
}

std::vector<EpisodeToken> tokenize(const Episode& episode) {
  std::vector<EpisodeToken> tokens;
  tokens.reserve(episode.support.size() + 1);
  for (const auto& item : episode.support) {
    if (item.label >= episode.ways) throw std::invalid_argument("tokenize: support label out of range");
    EpisodeToken t{item.image, Vec(episode.ways, 0.0), 0.0};
    t.label_onehot[item.label] = 1.0;
    tokens.push_back(std::move(t));
  }
  tokens.push_back({episode.query_image, Vec(episode.ways, 0.0), 1.0});
  return tokens;
}

std::vector<Vec> episode_inputs(const Episode& episode) {
  std::vector<Vec> inputs;
  for (const auto& t : tokenize(episode)) inputs.push_back(t.input());
  return inputs;
}

}  // namespace ptx
