#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ptx/episode.hpp"

namespace ptx {

/// Grayscale image in [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0, height = 0;
  Vec pixels;
};

/// Throws std::runtime_error on unreadable files.
GrayImage read_png_gray(const std::filesystem::path& path);
/// Box-filter resampling: each output pixel is the area-weighted mean of the
/// input pixels it covers.
GrayImage resample_area(const GrayImage& image, std::size_t width, std::size_t height);

/// Omniglot layout: root/<alphabet>/<character>/<sample>.png; each character
/// directory is one class. Images are resampled to side x side and inverted
/// so ink is 1 and background 0. Files are decoded on demand.
class OmniglotDataset final : public FewShotDataset {
 public:
  explicit OmniglotDataset(const std::filesystem::path& root, std::size_t side = 28);

  std::size_t class_count() const override { return classes_.size(); }
  std::size_t sample_count(std::size_t cls) const override { return classes_.at(cls).files.size(); }
  std::size_t pixels() const override { return side_ * side_; }
  Vec image(std::size_t cls, std::size_t sample) const override;
  const std::string& class_name(std::size_t cls) const { return classes_.at(cls).name; }

 private:
  struct ClassEntry {
    std::string name;  // "<alphabet>/<character>"
    std::vector<std::filesystem::path> files;
  };
  std::vector<ClassEntry> classes_;
  std::size_t side_;
};

}  // namespace ptx
