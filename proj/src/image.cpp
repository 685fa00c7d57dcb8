#include "cfa/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "cfa/error.hpp"

namespace cfa::data {

void validate(const RawImage& img) {
  if (img.width <= 0 || img.height <= 0) {
    throw ValidationError("degenerate image: zero dimension");
  }
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw ValidationError("image pixel count does not match width x height");
  }
}

namespace {

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

RawImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open image: " + path.string());
  if (pgm_token(in) != "P5") throw ValidationError("not a binary PGM (P5): " + path.string());
  RawImage img;
  int maxval = 0;
  try {
    img.width = std::stoi(pgm_token(in));
    img.height = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw ValidationError("malformed PGM header: " + path.string());
  }
  if (img.width <= 0 || img.height <= 0) throw ValidationError("degenerate image: zero dimension");
  if (maxval <= 0 || maxval > 255) throw ValidationError("unsupported PGM maxval: " + path.string());
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ValidationError("truncated PGM: " + path.string());
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::lround(255.0 * p / maxval));
  }
  return img;
}

RawImage load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ValidationError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ValidationError("cannot decode PNG " + path.string() + ": " + msg);
  }
  RawImage img;
  img.width = static_cast<int>(image.width);
  img.height = static_cast<int>(image.height);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
  }
  validate(img);
  return img;
}

}  // namespace

RawImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("missing image: " + path.string());
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 8> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5') return load_pgm(path);
  if (in.gcount() == 8 && png_sig_cmp(magic.data(), 0, 8) == 0) return load_png(path);
  throw ValidationError("unsupported image format: " + path.string());
}

void save_pgm(const RawImage& img, const std::filesystem::path& path) {
  validate(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write image: " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

RawImage resize_bilinear(const RawImage& img, int width, int height) {
  validate(img);
  if (width <= 0 || height <= 0) throw ValidationError("degenerate image: zero dimension");
  RawImage out{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height)};
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double top = (1 - wx) * img.at(x0, y0) + wx * img.at(x1, y0);
      const double bottom = (1 - wx) * img.at(x0, y1) + wx * img.at(x1, y1);
      const double v = (1 - wy) * top + wy * bottom;
      out.pixels[static_cast<std::size_t>(y) * width + x] =
          static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

RawImage equalize_histogram(const RawImage& img) {
  validate(img);
  std::array<std::size_t, 256> hist{};
  for (auto p : img.pixels) ++hist[p];
  std::array<std::uint8_t, 256> lut{};
  std::size_t cdf = 0;
  const double total = static_cast<double>(img.pixels.size());
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    lut[v] = static_cast<std::uint8_t>(std::lround(255.0 * static_cast<double>(cdf) / total));
  }
  RawImage out = img;
  for (auto& p : out.pixels) p = lut[p];
  return out;
}

RealVector preprocess(const RawImage& img, int side) {
  validate(img);
  if (side <= 0) throw ValidationError("preprocess: side must be positive");
  const RawImage eq = equalize_histogram(resize_bilinear(img, side, side));
  RealVector v(static_cast<Eigen::Index>(eq.pixels.size()));
  for (std::size_t i = 0; i < eq.pixels.size(); ++i) v[static_cast<Eigen::Index>(i)] = eq.pixels[i] / 255.0;
  return v;
}

}  // namespace cfa::data
