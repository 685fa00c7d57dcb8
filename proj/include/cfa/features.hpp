#pragma once

#include <numbers>
#include <vector>

#include "cfa/types.hpp"

namespace cfa::features {

/// Pixel-intensity feature: identity on a flattened square image.
RealVector intensity_feature(const RealVector& img);

struct GaborSpec {
  int scales = 5;
  int orientations = 8;
  int downsample = 4;
  double kmax = std::numbers::pi / 2;
  double spacing_f = std::numbers::sqrt2;
  double sigma = 2 * std::numbers::pi;
};

void validate(const GaborSpec& spec);

/// scales * orientations * (side / downsample)^2.
std::size_t gabor_feature_length(const GaborSpec& spec, int side);

/// Half-width of the truncated kernel support at `scale` for an image of
/// `side` pixels: min(ceil(3 sigma / k_s), side - 1).
int gabor_kernel_radius(const GaborSpec& spec, int scale, int side);

/// DC-free Gabor wavelet at offset (dx, dy):
/// (k^2/sigma^2) exp(-k^2 |z|^2 / (2 sigma^2)) (exp(i k.z) - exp(-sigma^2/2)),
/// k = kmax / f^scale at angle orientation * pi / orientations.
Complex gabor_kernel_value(const GaborSpec& spec, int scale, int orientation, int dx, int dy);

/// Precomputed kernel spectra for one image size; extract() is const and
/// safe to call concurrently.
class GaborBank {
 public:
  GaborBank(const GaborSpec& spec, int side);

  /// Magnitudes of every zero-padded ("same") convolution response, strided
  /// at offsets (0, 0) by `downsample`, concatenated scale-major then
  /// orientation, each map row-major.
  RealVector extract(const RealVector& img) const;

  const GaborSpec& spec() const { return spec_; }
  int side() const { return side_; }

 private:
  GaborSpec spec_;
  int side_;
  int radius_;  // largest kernel radius, sets the padding
  int fft_size_;
  std::vector<ComplexMatrix> kernel_spectra_;  // scales * orientations
};

RealVector gabor_feature(const RealVector& img, const GaborSpec& spec);

}  // namespace cfa::features
