#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfa/types.hpp"

namespace cfa::spectral {

/// 1D DFT of a PCA feature. Real inputs give conjugate-symmetric values.
struct Spectrum {
  ComplexVector values;
  ClassId label = 0;
  std::string source_id;
};

/// Unnormalized forward transform Y(k) = sum_n y(n) exp(-j 2 pi k n / p) for
/// any p >= 1 (radix-2 for powers of two, Bluestein otherwise). `inverse`
/// flips the exponent sign and still applies no 1/p.
ComplexVector fft(const ComplexVector& x, bool inverse = false);

ComplexVector dft(const RealVector& y);
Spectrum dft(const RealVector& y, ClassId label, std::string source_id = {});

/// Inverse of dft() including the 1/p factor.
ComplexVector idft(const ComplexVector& Y);

/// o(n) = sum_k conj(Y(k)) H(k) exp(j 2 pi k n / p).
Complex correlation_output(const ComplexVector& Y, const ComplexVector& H, int n);

/// o(n) for every shift n in one inverse transform.
ComplexVector correlation_plane(const ComplexVector& Y, const ComplexVector& H);

/// Y^+ H, the n = 0 correlation output.
Complex origin_output(const ComplexVector& Y, const ComplexVector& H);

enum class NoiseKind { white, custom_diagonal, explicit_samples };

struct NoiseModel {
  NoiseKind kind = NoiseKind::white;
  RealVector diagonal;                 // custom_diagonal
  std::vector<ComplexVector> samples;  // explicit_samples
  std::uint64_t rng_seed = 0;          // provenance of generated samples
};

/// white -> I, custom_diagonal -> diag(d), explicit_samples -> (1/Ns) sum N N^+.
ComplexMatrix noise_covariance(const NoiseModel& model, int p);

/// `count` spectra of real unit-variance white noise scaled by 1/sqrt(p),
/// so E[N N^+] = I and each spectrum is conjugate-symmetric.
std::vector<ComplexVector> white_noise_spectra(int count, int p, std::uint64_t seed);

}  // namespace cfa::spectral
