#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hybridmeas/errors.hpp"
#include "hybridmeas/fock.hpp"
#include "oracles.hpp"

using namespace hybridmeas;

namespace {

WignerGrid gaussian_grid(const GaussianMoments& m, double hbar = 1.0, int points = 257) {
  GridOptions o;
  o.points = points;
  return gaussian_wigner(m, default_grid(m, std::nullopt, o), hbar);
}

WignerGrid one_photon_grid() {
  const GaussianMoments vac{0.5, 0.5};
  GridOptions o;
  return photon_subtract(gaussian_wigner(vac, default_grid(vac, 1.0, o)), vac, {1.0, 0.5});
}

double max_deviation(const FockDensityMatrix& rho, int pure_level) {
  double worst = 0.0;
  for (int n = 0; n < rho.dim; ++n) {
    for (int m = 0; m < rho.dim; ++m) {
      const double target = (n == pure_level && m == pure_level) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(rho(n, m) - target));
    }
  }
  return worst;
}

cplx expectation(const FockDensityMatrix& rho, const CMatrix& op) {
  const CMatrix prod = multiply(rho.elements, op);
  cplx t = 0.0;
  for (int i = 0; i < prod.rows; ++i) t += prod(i, i);
  return t;
}

CMatrix random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix h(n, n);
  for (int i = 0; i < n; ++i) {
    h(i, i) = g(rng);
    for (int j = i + 1; j < n; ++j) {
      h(i, j) = {g(rng), g(rng)};
      h(j, i) = std::conj(h(i, j));
    }
  }
  return h;
}

}  // namespace

TEST_SUITE("fock") {

TEST_CASE("quadrature matrices") {
  const CMatrix p = quadrature_p(8);
  const CMatrix p2 = multiply(p, p);
  CHECK(p2(0, 0).real() == doctest::Approx(0.5));
  CHECK(p2(1, 1).real() == doctest::Approx(1.5));
  CHECK(p2(4, 4).real() == doctest::Approx(4.5));
  const CMatrix x = quadrature_x(8);
  const CMatrix xp = multiply(x, p);
  const CMatrix px = multiply(p, x);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const cplx c = xp(i, j) - px(i, j);
      const cplx expect = i == j ? cplx(0.0, 1.0) : cplx(0.0, 0.0);
      CHECK(std::abs(c - expect) < 1e-14);
    }
  }
  // Truncation only breaks the last diagonal entry.
  CHECK(std::abs(xp(8, 8) - px(8, 8) - cplx(0.0, 1.0)) > 1.0);
}

TEST_CASE("vacuum reconstructs to |0><0|") {
  const auto rho = reconstruct(gaussian_grid({0.5, 0.5}), 20);
  CHECK(max_deviation(rho, 0) < 1e-6);
  CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(rho.trace_deficit) < 1e-4);
}

TEST_CASE("photon-subtracted vacuum reconstructs to |1><1|") {
  const auto rho = reconstruct(one_photon_grid(), 24);
  CHECK(max_deviation(rho, 1) < 1e-5);
}

TEST_CASE("reconstruction is Hermitian") {
  const auto rho = reconstruct(gaussian_grid({0.9, 0.35}), 40);
  for (int n = 0; n < rho.dim; ++n) {
    for (int m = 0; m < rho.dim; ++m) CHECK(std::abs(rho(n, m) - std::conj(rho(m, n))) < 1e-10);
  }
}

TEST_CASE("Gaussian purity identity") {
  for (const GaussianMoments m : {GaussianMoments{0.9, 0.6}, GaussianMoments{2.0, 0.2},
                                  GaussianMoments{0.3, 3.0}}) {
    const auto rho = reconstruct_auto(gaussian_grid(m));
    CHECK(std::abs(rho.purity() - 1.0 / (2.0 * std::sqrt(m.product()))) < 1e-4);
  }
}

TEST_CASE("frame grids keep the purity identity with hbar") {
  const double hbar = std::exp(-1.0);
  const GaussianMoments m{0.7 * hbar, 0.9 * hbar};
  const auto rho = reconstruct_auto(gaussian_grid(m, hbar));
  CHECK(std::abs(rho.purity() - hbar / (2.0 * std::sqrt(m.product()))) < 1e-4);
}

TEST_CASE("second moments round-trip through the Fock basis") {
  const double hbar = std::exp(-0.4);
  const GaussianMoments m{1.3, 0.45};
  const auto rho = reconstruct_auto(gaussian_grid(m, hbar));
  const CMatrix x = quadrature_x(rho.dim - 1);
  const CMatrix p = quadrature_p(rho.dim - 1);
  const double a = rho.x_scale;
  const double vx = a * a * expectation(rho, multiply(x, x)).real();
  const double vp = hbar * hbar / (a * a) * expectation(rho, multiply(p, p)).real();
  CHECK(std::abs(vx - m.var_x) < 1e-4);
  CHECK(std::abs(vp - m.var_p) < 1e-4);
  CHECK(std::abs(expectation(rho, x)) < 1e-8);
}

TEST_CASE("too small a cutoff is reported with the measured tail") {
  const auto w = gaussian_grid({5.0, 5.0});
  try {
    reconstruct(w, 10);
    FAIL("expected CutoffError");
  } catch (const CutoffError& e) {
    CHECK(e.measured_tail() > 1e-5);
  }
  const auto rho = reconstruct_auto(w);
  CHECK(rho.tail_mass < 1e-5);
  CHECK(rho.dim > 11);
}

TEST_CASE("diagonal input yields identity eigenvectors") {
  CMatrix d(4, 4);
  d(0, 0) = 0.1;
  d(1, 1) = 0.4;
  d(2, 2) = 0.3;
  d(3, 3) = 0.2;
  const auto es = eigh(d);
  CHECK(es.values == std::vector<double>{0.4, 0.3, 0.2, 0.1});
  CHECK(std::abs(es.vectors(1, 0)) == 1.0);
  CHECK(std::abs(es.vectors(2, 1)) == 1.0);
  CHECK(std::abs(es.vectors(0, 3)) == 1.0);
}

TEST_CASE("random Hermitian eigensystem") {
  std::mt19937_64 rng(99);
  for (int n : {2, 7, 30}) {
    const CMatrix h = random_hermitian(n, rng);
    const auto es = eigh(h);
    const CMatrix hv = multiply(h, es.vectors);
    const CMatrix vhv = multiply(adjoint(es.vectors), es.vectors);
    double resid = 0.0;
    double ortho = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        resid = std::max(resid, std::abs(hv(i, j) - es.vectors(i, j) * es.values[j]));
        ortho = std::max(ortho, std::abs(vhv(i, j) - (i == j ? 1.0 : 0.0)));
      }
      if (i > 0) CHECK(es.values[i] <= es.values[i - 1]);
    }
    CHECK(resid < 1e-9);
    CHECK(ortho < 1e-10);
  }
}

TEST_CASE("Jacobi gives up loudly") {
  std::mt19937_64 rng(3);
  CHECK_THROWS_AS(eigh(random_hermitian(30, rng), 1e-12, 1), NumericalError);
}

TEST_CASE("density-matrix eigenvalues sum to one and reconstruct rho") {
  const auto rho = reconstruct_auto(gaussian_grid({1.1, 0.3}));
  const auto es = eigh(rho);
  double sum = 0.0;
  for (double l : es.values) sum += l;
  CHECK(std::abs(sum - 1.0) < 1e-8);
  double worst = 0.0;
  for (int i = 0; i < rho.dim; ++i) {
    for (int j = 0; j < rho.dim; ++j) {
      cplx acc = 0.0;
      for (int k = 0; k < rho.dim; ++k) {
        acc += es.values[k] * es.vectors(i, k) * std::conj(es.vectors(j, k));
      }
      worst = std::max(worst, std::abs(acc - rho(i, j)));
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("QFI anchors: vacuum 2, one photon 6") {
  CHECK(qfi_displacement(reconstruct(gaussian_grid({0.5, 0.5}), 20)) ==
        doctest::Approx(2.0).epsilon(1e-6));
  CHECK(qfi_displacement(reconstruct(one_photon_grid(), 24)) ==
        doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("pure states: QFI = 4 Var(P)") {
  // A squeezed vacuum reconstructed with a fixed unit scale is a genuine
  // multi-photon pure state in the Fock basis.
  const GaussianMoments m{1.2, 0.5 * 0.5 / 1.2};
  ReconstructOptions o;
  o.x_scale = 1.0;
  const auto rho = reconstruct_auto(gaussian_grid(m), o);
  REQUIRE(rho.purity() > 1.0 - 1e-6);
  const CMatrix p = quadrature_p(rho.dim - 1);
  const double var = expectation(rho, multiply(p, p)).real() - std::norm(expectation(rho, p));
  CHECK(std::abs(qfi_displacement(rho) - 4.0 * var) < 1e-5);
}

TEST_CASE("Gaussian QFI matches the thermal-series oracle") {
  for (double hbar : {1.0, std::exp(-0.5), std::exp(-2.0)}) {
    for (const GaussianMoments m : {GaussianMoments{0.9, 0.6}, GaussianMoments{2.0, 0.2},
                                    GaussianMoments{0.3, 3.0}}) {
      const GaussianMoments mm{m.var_x * hbar, m.var_p * hbar};
      const double f = qfi_displacement(reconstruct_auto(gaussian_grid(mm, hbar)));
      const double ref = oracle::gaussian_qfi_series(mm.var_x, mm.var_p, hbar);
      CAPTURE(hbar);
      CAPTURE(m.var_x);
      CHECK(std::abs(f / ref - 1.0) < 1e-4);
    }
  }
}

TEST_CASE("QFI plateaus once the tail is negligible") {
  const auto w = gaussian_grid({1.6, 0.9});
  const double f40 = qfi_displacement(reconstruct(w, 40));
  const double f64 = qfi_displacement(reconstruct(w, 64));
  const double f96 = qfi_displacement(reconstruct(w, 96));
  CHECK(std::abs(f64 / f40 - 1.0) < 1e-6);
  CHECK(std::abs(f96 / f64 - 1.0) < 1e-6);
}

TEST_CASE("small negative eigenvalues are clamped, large ones throw") {
  FockDensityMatrix rho;
  rho.dim = 3;
  rho.elements = CMatrix(3, 3);
  rho.elements(0, 0) = 0.6;
  rho.elements(1, 1) = 0.4 + 5e-9;
  rho.elements(2, 2) = -5e-9;
  const auto r = qfi_displacement_detailed(rho);
  CHECK(r.clamped == 1);
  CHECK(r.min_eigenvalue == doctest::Approx(-5e-9));
  rho.elements(2, 2) = -1e-6;
  CHECK_THROWS_AS(qfi_displacement(rho), NumericalError);
}

TEST_CASE("JSON dump") {
  const auto rho = reconstruct(gaussian_grid({0.5, 0.5}), 6);
  std::ostringstream os;
  write_json(os, rho);
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j["dim"] == 7);
  CHECK(j["real"].size() == 49);
  CHECK(j["imag"].size() == 49);
  CHECK(j["real"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

}
