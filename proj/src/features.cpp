#include "cfa/features.hpp"

#include <bit>
#include <cmath>

#include "cfa/error.hpp"
#include "cfa/spectral.hpp"

namespace cfa::features {

namespace {

int square_side(const RealVector& img) {
  const auto n = img.size();
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (n == 0 || side * side != n) {
    throw ValidationError("image vector length " + std::to_string(n) + " is not a perfect square");
  }
  return static_cast<int>(side);
}

// 2D transform by rows then columns.
void fft2(ComplexMatrix& a, bool inverse) {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    a.row(r) = spectral::fft(a.row(r).transpose(), inverse).transpose();
  }
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    a.col(c) = spectral::fft(a.col(c), inverse);
  }
}

double wave_number(const GaborSpec& spec, int scale) {
  return spec.kmax / std::pow(spec.spacing_f, scale);
}

}  // namespace

RealVector intensity_feature(const RealVector& img) {
  square_side(img);
  return img;
}

void validate(const GaborSpec& spec) {
  if (spec.scales < 1 || spec.orientations < 1 || spec.downsample < 1) {
    throw ValidationError("gabor: scales, orientations and downsample must be >= 1");
  }
  if (!(spec.kmax > 0) || !(spec.spacing_f > 0) || !(spec.sigma > 0)) {
    throw ValidationError("gabor: kmax, spacing_f and sigma must be positive");
  }
}

std::size_t gabor_feature_length(const GaborSpec& spec, int side) {
  validate(spec);
  if (side < 1 || side % spec.downsample != 0) {
    throw ValidationError("gabor: side " + std::to_string(side) + " is not divisible by downsample " +
                          std::to_string(spec.downsample));
  }
  const auto cells = static_cast<std::size_t>(side / spec.downsample);
  return static_cast<std::size_t>(spec.scales) * static_cast<std::size_t>(spec.orientations) * cells * cells;
}

int gabor_kernel_radius(const GaborSpec& spec, int scale, int side) {
  const int r = static_cast<int>(std::ceil(3.0 * spec.sigma / wave_number(spec, scale)));
  return std::min(r, side - 1);
}

Complex gabor_kernel_value(const GaborSpec& spec, int scale, int orientation, int dx, int dy) {
  const double k = wave_number(spec, scale);
  const double phi = orientation * std::numbers::pi / spec.orientations;
  const double k2 = k * k;
  const double s2 = spec.sigma * spec.sigma;
  const double r2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
  const double envelope = (k2 / s2) * std::exp(-k2 * r2 / (2.0 * s2));
  const double phase = k * (std::cos(phi) * dx + std::sin(phi) * dy);
  return envelope * (std::polar(1.0, phase) - std::exp(-s2 / 2.0));
}

GaborBank::GaborBank(const GaborSpec& spec, int side) : spec_(spec), side_(side) {
  validate(spec);
  if (side < 1) throw ValidationError("gabor: side must be positive");
  if (side % spec.downsample != 0) {
    throw ValidationError("gabor: side " + std::to_string(side) + " is not divisible by downsample " +
                          std::to_string(spec.downsample));
  }
  radius_ = 0;
  for (int s = 0; s < spec.scales; ++s) radius_ = std::max(radius_, gabor_kernel_radius(spec, s, side));
  fft_size_ = static_cast<int>(std::bit_ceil(static_cast<unsigned>(side + 2 * radius_)));

  kernel_spectra_.reserve(static_cast<std::size_t>(spec.scales * spec.orientations));
  for (int s = 0; s < spec.scales; ++s) {
    const int r = gabor_kernel_radius(spec, s, side);
    for (int o = 0; o < spec.orientations; ++o) {
      // Kernel tap (dx, dy) sits at (radius_ + dx, radius_ + dy) so that the
      // full convolution index x + radius_ is the "same" output at x.
      ComplexMatrix k = ComplexMatrix::Zero(fft_size_, fft_size_);
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          k(radius_ + dy, radius_ + dx) = gabor_kernel_value(spec, s, o, dx, dy);
        }
      }
      fft2(k, false);
      kernel_spectra_.push_back(std::move(k));
    }
  }
}

RealVector GaborBank::extract(const RealVector& img) const {
  if (img.size() != static_cast<Eigen::Index>(side_) * side_) {
    throw ValidationError("gabor: image length does not match bank side " + std::to_string(side_));
  }
  ComplexMatrix padded = ComplexMatrix::Zero(fft_size_, fft_size_);
  for (int y = 0; y < side_; ++y) {
    for (int x = 0; x < side_; ++x) padded(y, x) = img[static_cast<Eigen::Index>(y) * side_ + x];
  }
  fft2(padded, false);

  const int cells = side_ / spec_.downsample;
  RealVector out(static_cast<Eigen::Index>(gabor_feature_length(spec_, side_)));
  Eigen::Index pos = 0;
  const double norm = 1.0 / (static_cast<double>(fft_size_) * fft_size_);
  for (const auto& kspec : kernel_spectra_) {
    ComplexMatrix response = padded.cwiseProduct(kspec);
    fft2(response, true);
    for (int cy = 0; cy < cells; ++cy) {
      for (int cx = 0; cx < cells; ++cx) {
        const int y = cy * spec_.downsample + radius_;
        const int x = cx * spec_.downsample + radius_;
        out[pos++] = std::abs(response(y, x)) * norm;
      }
    }
  }
  return out;
}

RealVector gabor_feature(const RealVector& img, const GaborSpec& spec) {
  return GaborBank(spec, square_side(img)).extract(img);
}

}  // namespace cfa::features
