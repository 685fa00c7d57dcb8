#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cfa/types.hpp"

namespace cfa::data {

/// 8-bit grayscale image, row-major.
struct RawImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

void validate(const RawImage& img);

/// Reads binary PGM (P5, maxval <= 255) or PNG. Colour PNGs are converted
/// with luma weights 0.299/0.587/0.114.
RawImage load_image(const std::filesystem::path& path);

/// Writes binary PGM (P5).
void save_pgm(const RawImage& img, const std::filesystem::path& path);

/// Bilinear resize with half-pixel centres and edge clamping; rounds to 8 bits.
RawImage resize_bilinear(const RawImage& img, int width, int height);

/// 256-bin histogram equalization, level v -> round(255 * cdf(v) / count).
RawImage equalize_histogram(const RawImage& img);

/// Resize to side x side, equalize, flatten row-major and scale to [0, 1].
RealVector preprocess(const RawImage& img, int side = 64);

}  // namespace cfa::data
