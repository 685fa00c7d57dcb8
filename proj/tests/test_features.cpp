#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cfa/error.hpp"
#include "cfa/features.hpp"
#include "oracles.hpp"

using namespace cfa;
using namespace cfa::features;

namespace {

// Gabor wavelet written out from its textbook form.
Complex wavelet(double kmax, double f, double sigma, int orientations, int s, int o, int dx, int dy) {
  const double k = kmax / std::pow(f, s);
  const double phi = std::numbers::pi * o / orientations;
  const double kx = k * std::cos(phi), ky = k * std::sin(phi);
  const double gauss = (k * k / (sigma * sigma)) * std::exp(-(k * k) * (dx * dx + dy * dy) / (2 * sigma * sigma));
  return gauss * (Complex(std::cos(kx * dx + ky * dy), std::sin(kx * dx + ky * dy)) - std::exp(-sigma * sigma / 2));
}

// Zero-padded spatial convolution, magnitudes, strided picking.
RealVector brute_force_feature(const RealVector& img, int side, const GaborSpec& g) {
  std::vector<double> out;
  for (int s = 0; s < g.scales; ++s) {
    const double k = g.kmax / std::pow(g.spacing_f, s);
    const int r = std::min(static_cast<int>(std::ceil(3 * g.sigma / k)), side - 1);
    for (int o = 0; o < g.orientations; ++o) {
      for (int y = 0; y < side; y += g.downsample) {
        for (int x = 0; x < side; x += g.downsample) {
          Complex acc = 0;
          for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
              const int sx = x - dx, sy = y - dy;
              if (sx < 0 || sy < 0 || sx >= side || sy >= side) continue;
              acc += img[sy * side + sx] * wavelet(g.kmax, g.spacing_f, g.sigma, g.orientations, s, o, dx, dy);
            }
          }
          out.push_back(std::abs(acc));
        }
      }
    }
  }
  return Eigen::Map<RealVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

RealVector random_image(Rng& rng, int side) {
  RealVector v(side * side);
  for (auto& x : v) x = rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("intensity feature passes pixels through") {
  Rng rng(4);
  const RealVector big = random_image(rng, 64);
  CHECK(intensity_feature(big) == big);
  CHECK(intensity_feature(RealVector::Zero(4096)).isZero());
  CHECK(intensity_feature(RealVector::Ones(64)).size() == 64);
  CHECK_THROWS_AS(intensity_feature(RealVector::Ones(10)), ValidationError);
}

TEST_CASE("gabor output length") {
  CHECK(gabor_feature_length(GaborSpec{}, 64) == 10240);
  for (int s : {1, 2, 5}) {
    for (int o : {1, 4, 8}) {
      for (int d : {1, 2, 4, 8}) {
        GaborSpec g;
        g.scales = s;
        g.orientations = o;
        g.downsample = d;
        CHECK(gabor_feature_length(g, 64) == static_cast<std::size_t>(s * o * (64 / d) * (64 / d)));
      }
    }
  }
  GaborSpec odd;
  odd.downsample = 3;
  CHECK_THROWS_AS(gabor_feature_length(odd, 64), ValidationError);
  GaborSpec zero;
  zero.scales = 0;
  CHECK_THROWS_AS(validate(zero), ValidationError);
}

TEST_CASE("kernel values match the wavelet formula and are DC free") {
  const GaborSpec g;
  for (int s = 0; s < 5; ++s) {
    for (int o = 0; o < 8; ++o) {
      for (int d : {-3, 0, 2}) {
        const Complex want = wavelet(g.kmax, g.spacing_f, g.sigma, g.orientations, s, o, d, 1 - d);
        CHECK(std::abs(gabor_kernel_value(g, s, o, d, 1 - d) - want) < 1e-14);
      }
    }
  }
  // Summed over a wide window the DC-compensated kernel integrates to about zero.
  Complex sum = 0;
  for (int dy = -40; dy <= 40; ++dy) {
    for (int dx = -40; dx <= 40; ++dx) sum += gabor_kernel_value(g, 0, 0, dx, dy);
  }
  CHECK(std::abs(sum) < 1e-6);
}

TEST_CASE("impulse response equals the kernel magnitude") {
  GaborSpec g;
  g.scales = 1;
  g.orientations = 1;
  g.downsample = 1;
  const int side = 16;
  RealVector img = RealVector::Zero(side * side);
  img[7 * side + 5] = 1;
  const RealVector f = gabor_feature(img, g);
  const int r = gabor_kernel_radius(g, 0, side);
  CHECK(r == 12);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int dx = x - 5, dy = y - 7;
      const double want = (std::abs(dx) <= r && std::abs(dy) <= r)
                              ? std::abs(wavelet(g.kmax, g.spacing_f, g.sigma, 1, 0, 0, dx, dy))
                              : 0.0;
      REQUIRE(f[y * side + x] == doctest::Approx(want).epsilon(1e-9).scale(1e-12));
    }
  }
}

TEST_CASE("bank matches brute-force convolution with several scales and orientations") {
  GaborSpec g;
  g.scales = 2;
  g.orientations = 3;
  g.downsample = 2;
  const int side = 12;
  Rng rng(8);
  const RealVector img = random_image(rng, side);
  const RealVector got = gabor_feature(img, g);
  const RealVector want = brute_force_feature(img, side, g);
  REQUIRE(got.size() == want.size());
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-9 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("gabor features: zero image, sign flip and positive scaling") {
  const int side = 32;
  GaborSpec g;
  g.scales = 3;
  g.orientations = 4;
  const GaborBank bank(g, side);
  CHECK(bank.extract(RealVector::Zero(side * side)).isZero());

  Rng rng(12);
  RealVector x = random_image(rng, side);
  x.array() -= x.mean();
  const RealVector f = bank.extract(x);
  CHECK((bank.extract(-x) - f).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((bank.extract(2.5 * x) - 2.5 * f).cwiseAbs().maxCoeff() <= 1e-9 * f.maxCoeff());
  CHECK_THROWS_AS(bank.extract(RealVector::Zero(10)), ValidationError);
}

TEST_CASE("default bank on a 64x64 image") {
  Rng rng(1);
  const RealVector f = gabor_feature(random_image(rng, 64), GaborSpec{});
  CHECK(f.size() == 10240);
  CHECK(f.allFinite());
  CHECK(f.minCoeff() >= 0);
}
