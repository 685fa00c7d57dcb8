#include "cfa/spectral.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "cfa/error.hpp"
#include "cfa/rng.hpp"

namespace cfa::spectral {

namespace {

constexpr double kPi = std::numbers::pi;

// In-place iterative radix-2 transform; n must be a power of two.
void fft_pow2(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    std::vector<Complex> tw(half);
    for (std::size_t k = 0; k < half; ++k) {
      tw[k] = std::polar(1.0, sign * 2.0 * kPi * static_cast<double>(k) / static_cast<double>(len));
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * tw[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

// Chirp-z (Bluestein) transform for arbitrary n.
std::vector<Complex> fft_bluestein(const std::vector<Complex>& x, bool inverse) {
  const std::size_t n = x.size();
  const std::size_t m = std::bit_ceil(2 * n - 1);
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the phase argument small.
    const auto k2 = static_cast<double>((static_cast<unsigned long long>(k) * k) % (2 * n));
    chirp[k] = std::polar(1.0, sign * kPi * k2 / static_cast<double>(n));
  }
  std::vector<Complex> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  fft_pow2(a, false);
  fft_pow2(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_pow2(a, true);
  std::vector<Complex> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
  return out;
}

void require_same_length(const ComplexVector& Y, const ComplexVector& H) {
  if (Y.size() != H.size()) {
    throw ValidationError("dimension mismatch: spectrum length " + std::to_string(Y.size()) +
                          " vs filter length " + std::to_string(H.size()));
  }
}

}  // namespace

ComplexVector fft(const ComplexVector& x, bool inverse) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n <= 1) return x;
  std::vector<Complex> a(x.data(), x.data() + n);
  if (std::has_single_bit(n)) {
    fft_pow2(a, inverse);
  } else {
    a = fft_bluestein(a, inverse);
  }
  return Eigen::Map<ComplexVector>(a.data(), static_cast<Eigen::Index>(n));
}

ComplexVector dft(const RealVector& y) {
  if (y.size() < 1) throw ValidationError("dft: empty input");
  return fft(y.cast<Complex>(), false);
}

Spectrum dft(const RealVector& y, ClassId label, std::string source_id) {
  return {dft(y), label, std::move(source_id)};
}

ComplexVector idft(const ComplexVector& Y) {
  if (Y.size() < 1) throw ValidationError("idft: empty input");
  return fft(Y, true) / static_cast<double>(Y.size());
}

Complex correlation_output(const ComplexVector& Y, const ComplexVector& H, int n) {
  require_same_length(Y, H);
  const auto p = Y.size();
  if (n < 0 || n >= p) throw ValidationError("correlation_output: shift out of range");
  Complex acc = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto kn = static_cast<double>((static_cast<long long>(k) * n) % p);
    acc += std::conj(Y[k]) * H[k] * std::polar(1.0, 2.0 * kPi * kn / static_cast<double>(p));
  }
  return acc;
}

ComplexVector correlation_plane(const ComplexVector& Y, const ComplexVector& H) {
  require_same_length(Y, H);
  return fft(Y.conjugate().cwiseProduct(H), true);
}

Complex origin_output(const ComplexVector& Y, const ComplexVector& H) {
  require_same_length(Y, H);
  return Y.dot(H);  // Eigen conjugates the left operand
}

ComplexMatrix noise_covariance(const NoiseModel& model, int p) {
  if (p < 1) throw ValidationError("noise_covariance: p must be >= 1");
  switch (model.kind) {
    case NoiseKind::white:
      return ComplexMatrix::Identity(p, p);
    case NoiseKind::custom_diagonal: {
      if (model.diagonal.size() != p) throw ValidationError("noise_covariance: diagonal length != p");
      if ((model.diagonal.array() <= 0.0).any() || !model.diagonal.allFinite()) {
        throw ValidationError("noise_covariance: diagonal entries must be positive");
      }
      return model.diagonal.cast<Complex>().asDiagonal();
    }
    case NoiseKind::explicit_samples: {
      if (model.samples.empty()) throw ValidationError("noise_covariance: explicit_samples is empty");
      ComplexMatrix C = ComplexMatrix::Zero(p, p);
      for (const auto& s : model.samples) {
        if (s.size() != p) throw ValidationError("noise_covariance: noise sample length != p");
        C.noalias() += s * s.adjoint();
      }
      C /= static_cast<double>(model.samples.size());
      return C;
    }
  }
  throw ValidationError("noise_covariance: unknown noise kind");
}

std::vector<ComplexVector> white_noise_spectra(int count, int p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ComplexVector> out;
  out.reserve(static_cast<std::size_t>(count));
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  for (int i = 0; i < count; ++i) {
    RealVector y(p);
    for (int j = 0; j < p; ++j) y[j] = rng.normal();
    out.push_back(dft(y) * scale);
  }
  return out;
}

}  // namespace cfa::spectral
