#include "ptx/omniglot.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ptx {

namespace fs = std::filesystem;

GrayImage read_png_gray(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = img.message;
    png_image_free(&img);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + message);
  }
  GrayImage out{img.width, img.height, Vec(buffer.size())};
  for (std::size_t i = 0; i < buffer.size(); ++i) out.pixels[i] = buffer[i] / 255.0;
  return out;
}

namespace {

// Overlap weights of output cell o with input cells along one axis.
std::vector<std::vector<std::pair<std::size_t, double>>> axis_weights(std::size_t in, std::size_t out) {
  std::vector<std::vector<std::pair<std::size_t, double>>> w(out);
  const double step = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double lo = o * step, hi = (o + 1) * step;
    for (auto i = static_cast<std::size_t>(std::floor(lo)); i < in && static_cast<double>(i) < hi; ++i) {
      const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
      if (overlap > 0) w[o].emplace_back(i, overlap / step);
    }
  }
  return w;
}

}  // namespace

GrayImage resample_area(const GrayImage& image, std::size_t width, std::size_t height) {
  if (image.width == 0 || image.height == 0 || width == 0 || height == 0) {
    throw std::invalid_argument("resample_area: empty image");
  }
  if (image.pixels.size() != image.width * image.height) throw std::invalid_argument("resample_area: pixel count");
  const auto wx = axis_weights(image.width, width);
  const auto wy = axis_weights(image.height, height);
  GrayImage out{width, height, Vec(width * height, 0.0)};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (const auto& [iy, fy] : wy[y]) {
        for (const auto& [ix, fx] : wx[x]) acc += fy * fx * image.pixels[iy * image.width + ix];
      }
      out.pixels[y * width + x] = acc;
    }
  }
  return out;
}

OmniglotDataset::OmniglotDataset(const fs::path& root, std::size_t side) : side_(side) {
  if (side == 0) throw std::invalid_argument("OmniglotDataset: side must be positive");
  if (!fs::is_directory(root)) throw std::runtime_error("Omniglot root is not a directory: " + root.string());
  std::vector<fs::path> alphabets;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) alphabets.push_back(e.path());
  }
  std::sort(alphabets.begin(), alphabets.end());
  for (const auto& alphabet : alphabets) {
    std::vector<fs::path> characters;
    for (const auto& e : fs::directory_iterator(alphabet)) {
      if (e.is_directory()) characters.push_back(e.path());
    }
    std::sort(characters.begin(), characters.end());
    for (const auto& character : characters) {
      ClassEntry entry{alphabet.filename().string() + "/" + character.filename().string(), {}};
      for (const auto& e : fs::directory_iterator(character)) {
        if (e.is_regular_file() && e.path().extension() == ".png") entry.files.push_back(e.path());
      }
      std::sort(entry.files.begin(), entry.files.end());
      if (!entry.files.empty()) classes_.push_back(std::move(entry));
    }
  }
  if (classes_.empty()) throw std::runtime_error("no character directories with PNG files under " + root.string());
}

Vec OmniglotDataset::image(std::size_t cls, std::size_t sample) const {
  const GrayImage raw = read_png_gray(classes_.at(cls).files.at(sample));
  GrayImage img = resample_area(raw, side_, side_);
  for (auto& v : img.pixels) v = std::clamp(1.0 - v, 0.0, 1.0);
  return img.pixels;
}

}  // namespace ptx
