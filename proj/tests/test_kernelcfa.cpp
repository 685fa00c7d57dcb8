#include <doctest.h>

#include <cmath>

#include "cfa/error.hpp"
#include "cfa/filterbank.hpp"
#include "cfa/kernelcfa.hpp"
#include "cfa/linalg.hpp"
#include "oracles.hpp"

using namespace cfa;
using namespace cfa::kernel;
using cfa::filters::TradeoffParams;
using cfa::spectral::Spectrum;

namespace {

double rbf(const ComplexVector& x, const ComplexVector& y, double delta) {
  double d2 = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) d2 += std::norm(x[i] - y[i]);
  return std::exp(-d2 / (delta * delta));
}

// K and U for an rbf kernel with ridge noise, assembled from scalar evaluations.
struct KernelSystem {
  ComplexMatrix K;
  ComplexVector U;
};

KernelSystem rbf_system(const std::vector<Spectrum>& s, int l, double delta, double lambda, const TradeoffParams& w) {
  const auto n = static_cast<Eigen::Index>(s.size());
  KernelSystem out{ComplexMatrix::Zero(n, n), ComplexVector::Zero(n)};
  int n_l = 0, n_el = 0;
  for (const auto& x : s) (x.label == l ? n_l : n_el)++;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& x : s) {
      if (x.label == l) out.U[i] += rbf(s[static_cast<std::size_t>(i)].values, x.values, delta) / n_l;
    }
  }
  for (const auto& e : s) {
    if (e.label == l) continue;
    ComplexVector psi(n);
    for (Eigen::Index j = 0; j < n; ++j) psi[j] = rbf(s[static_cast<std::size_t>(j)].values, e.values, delta);
    out.K += w.omega_s / n_el * psi * psi.adjoint();
  }
  out.K.diagonal().array() += w.omega_n * lambda;
  return out;
}

}  // namespace

TEST_CASE("kernel evaluation") {
  Rng rng(1);
  const ComplexVector x = oracle::random_complex(rng, 5);
  const KernelSpec rbf3;
  CHECK(kernel_eval(rbf3, x, x) == Complex(1, 0));
  ComplexVector a = ComplexVector::Zero(3), b = ComplexVector::Zero(3);
  a[0] = 1;
  b[1] = Complex(0, 1);
  const KernelSpec lin{KernelKind::linear};
  CHECK(kernel_eval(lin, a, b) == Complex(0, 0));
  CHECK(std::abs(kernel_eval(rbf3, a, ComplexVector::Zero(3)) - std::exp(-1.0 / 9.0)) < 1e-15);
  CHECK(kernel_eval(rbf3, a, ComplexVector::Zero(3)).real() == doctest::Approx(0.89484).epsilon(1e-5));

  const ComplexVector y = oracle::random_complex(rng, 5);
  CHECK(std::abs(kernel_eval(lin, x, y) - oracle::inner(x, y)) < 1e-13);
  const KernelSpec poly{KernelKind::polynomial, 3.0, 3, 0.5};
  const double base = oracle::inner(x, y).real() + 0.5;
  CHECK(kernel_eval(poly, x, y).real() == doctest::Approx(base * base * base).epsilon(1e-12));
  CHECK(kernel_eval(rbf3, x, y).real() == doctest::Approx(rbf(x, y, 3)).epsilon(1e-14));

  CHECK_THROWS_AS(kernel_eval(rbf3, x, a), ValidationError);
  CHECK_THROWS_AS(validate(KernelSpec{KernelKind::rbf, 0.0}), ValidationError);
  CHECK_THROWS_AS(validate(KernelSpec{KernelKind::polynomial, 1.0, 0}), ValidationError);
}

TEST_CASE("gram matrices are Hermitian and rbf grams are positive semidefinite") {
  Rng rng(2);
  for (auto kind : {KernelKind::rbf, KernelKind::linear, KernelKind::polynomial}) {
    const KernelSpec spec{kind, 2.0, 2, 1.0};
    for (int t = 0; t < 5; ++t) {
      const ComplexVector x = oracle::random_complex(rng, 4), y = oracle::random_complex(rng, 4);
      CHECK(std::abs(kernel_eval(spec, x, y) - std::conj(kernel_eval(spec, y, x))) < 1e-12 * std::max(1.0, std::abs(kernel_eval(spec, x, y))));
    }
  }
  for (int t = 0; t < 10; ++t) {
    const auto s = oracle::random_spectra(rng, oracle::cycled_labels(12, 3), 6);
    const ComplexMatrix G = gram(KernelSpec{KernelKind::rbf, 1.0 + t}, s);
    CHECK(linalg::hermitian_defect(G) == 0.0);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) {
        REQUIRE(std::abs(G(i, j) - rbf(s[static_cast<std::size_t>(i)].values, s[static_cast<std::size_t>(j)].values, 1.0 + t)) < 1e-14);
      }
    }
  }
}

TEST_CASE("class mean and tradeoff matrix match direct sums") {
  Rng rng(3);
  const auto s = oracle::random_spectra(rng, oracle::cycled_labels(9, 3), 6);
  const KernelSpec spec{KernelKind::rbf, 4.0};
  const ComplexMatrix G = gram(spec, s);
  const TradeoffParams w;
  const NoiseMode ridge{NoiseKind::ridge, 0.7, 0};
  for (int l = 0; l < 3; ++l) {
    const auto sys = rbf_system(s, l, 4.0, 0.7, w);
    CHECK((kernel_class_mean(G, s, l) - sys.U).norm() < 1e-13);
    CHECK((kernel_tradeoff_matrix(G, s, l, spec, ridge, w) - sys.K).norm() < 1e-13);
  }
}

TEST_CASE("KUOOTF maximizes the kernel Rayleigh quotient") {
  Rng rng(4);
  const auto s = oracle::random_spectra(rng, oracle::cycled_labels(9, 3), 6);
  const KernelSpec spec;
  const NoiseMode ridge;
  const TradeoffParams w;
  for (int l = 0; l < 3; ++l) {
    const auto f = kuootf_design(s, l, spec, ridge, w);
    CHECK(f.alpha.size() == 9);
    CHECK(f.escalations == 0);
    const auto sys = rbf_system(s, l, 3.0, 1.0, w);
    const double best = oracle::rayleigh(f.alpha, sys.U, sys.K);
    CHECK(kernel_criterion(f.alpha, sys.U, sys.K) == doctest::Approx(best).epsilon(1e-12));
    for (int t = 0; t < 200; ++t) {
      const ComplexVector d = oracle::perturbation(rng, 9, 1e-3 * f.alpha.norm());
      REQUIRE(oracle::rayleigh(ComplexVector(f.alpha + d), sys.U, sys.K) <= best * (1 + 1e-12));
    }
    const ComplexVector v = oracle::dominant_eigenvector(ComplexMatrix(sys.K.inverse() * sys.U * sys.U.adjoint()));
    CHECK(oracle::complex_cosine(f.alpha, v) >= 1 - 1e-6);
  }
}

TEST_CASE("design preconditions and regularization escalation") {
  Rng rng(5);
  const auto lone = oracle::random_spectra(rng, {0}, 4);
  try {
    kuootf_design(lone, 0, KernelSpec{}, NoiseMode{}, TradeoffParams{});
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("no extra-class samples") != std::string::npos);
  }

  auto dup = oracle::random_spectra(rng, {0, 1, 1}, 4);
  dup[2].values = dup[1].values;
  const auto f = kuootf_design(dup, 0, KernelSpec{}, NoiseMode{NoiseKind::ridge, 1e-16, 0}, TradeoffParams{});
  CHECK(f.escalations > 0);
  CHECK(f.noise.lambda > 1e-16);
  CHECK(f.alpha.allFinite());
  CHECK_THROWS_AS(kuootf_design(dup, 0, KernelSpec{}, NoiseMode{NoiseKind::ridge, 1.0, 0}, TradeoffParams{1, 0}),
                  NumericalError);
}

TEST_CASE("linear kernel with ridge noise reduces to UOOTF on a spanning set") {
  Rng rng(6);
  const int p = 6;
  const auto s = oracle::random_spectra(rng, oracle::cycled_labels(p, 3), p);
  ComplexMatrix S(p, p);
  for (int i = 0; i < p; ++i) S.col(i) = s[static_cast<std::size_t>(i)].values;
  const double lambda = 0.5;
  // With S square, S^+ C S = lambda I exactly when C = lambda (S S^+)^{-1}.
  const ComplexMatrix C = lambda * (S * S.adjoint()).inverse();
  const TradeoffParams w;
  const KernelSpec lin{KernelKind::linear};
  const auto kbank = build_kernel_bank(s, lin, NoiseMode{NoiseKind::ridge, lambda, 0}, w);
  const auto lbank = filters::build_bank(s, filters::FilterKind::uootf, ComplexMatrix(0.5 * (C + C.adjoint())), w);
  for (int t = 0; t < 5; ++t) {
    const ComplexVector Y = oracle::naive_dft(oracle::random_real(rng, p));
    const RealVector a = kernel_feature(kbank, Y);
    const RealVector b = filters::extract_feature(lbank, Y);
    CHECK((a - b).norm() <= 1e-6 * b.norm());
  }
}

TEST_CASE("kernel features") {
  Rng rng(7);
  const auto s = oracle::random_spectra(rng, {0, 1, 2}, 5);
  const KernelSpec lin{KernelKind::linear};
  const auto bank = build_kernel_bank(s, lin, NoiseMode{}, TradeoffParams{});
  CHECK(bank.class_count() == 3);
  CHECK(bank.p() == 5);
  CHECK(bank.train->size() == 3);

  // Representer identity: H = sum_i alpha_i Y_i.
  filters::FilterBank explicit_bank;
  explicit_bank.p = 5;
  for (const auto& f : bank.filters) {
    filters::CorrelationFilter cf;
    cf.H = ComplexVector::Zero(5);
    for (std::size_t i = 0; i < s.size(); ++i) cf.H += f.alpha[static_cast<Eigen::Index>(i)] * s[i].values;
    explicit_bank.filters.push_back(cf);
  }
  for (int t = 0; t < 5; ++t) {
    const ComplexVector Y = oracle::naive_dft(oracle::random_real(rng, 5));
    const RealVector a = kernel_feature(bank, Y);
    const RealVector b = filters::extract_feature(explicit_bank, Y);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  }

  auto zero = bank;
  for (auto& f : zero.filters) f.alpha.setZero();
  CHECK(kernel_feature(zero, s[0].values).isZero());

  KernelBank single;
  single.kernel = KernelSpec{};
  single.train = std::make_shared<const std::vector<Spectrum>>(std::vector<Spectrum>{s[1]});
  KernelFilter one;
  one.alpha = ComplexVector::Ones(1);
  single.filters.push_back(one);
  CHECK(kernel_feature(single, s[1].values)[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(kernel_feature(single, ComplexVector::Zero(3)), ValidationError);
}

TEST_CASE("explicit noise spectra are seeded per class") {
  const NoiseMode m{NoiseKind::explicit_, 1.0, 99};
  const auto a = class_noise_spectra(m, 2, 4, 6);
  const auto b = class_noise_spectra(m, 2, 4, 6);
  const auto c = class_noise_spectra(m, 3, 4, 6);
  REQUIRE(a.size() == 4);
  CHECK(a[0] == b[0]);
  CHECK(a[0] != c[0]);
}
