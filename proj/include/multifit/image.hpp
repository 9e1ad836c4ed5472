#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace multifit {

// Row-major interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(3u * w * h, 0) {}

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::uint8_t* at(int x, int y) { return &data[3 * (std::size_t(y) * width + x)]; }
  const std::uint8_t* at(int x, int y) const {
    return &data[3 * (std::size_t(y) * width + x)];
  }
};

// Integer label per pixel, row-major.
struct LabelGrid {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
};

RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);
/// Dispatches on the file signature (P6 or PNG).
RgbImage read_image(const std::filesystem::path& path);

/// CSV grid (height rows of width integers) or 16-bit binary PGM (P5).
LabelGrid read_label_grid(const std::filesystem::path& path);
void write_label_csv(const std::filesystem::path& path, const LabelGrid& grid);

}  // namespace multifit
