#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hybridmeas/errors.hpp"
#include "hybridmeas/wigner.hpp"
#include "oracles.hpp"

using namespace hybridmeas;

namespace {

constexpr double kPi = std::numbers::pi;

WignerGrid vacuum_grid(int points = 257) {
  GridOptions o;
  o.points = points;
  const GaussianMoments vac{0.5, 0.5};
  return gaussian_wigner(vac, default_grid(vac, 1.0, o));
}

WignerGrid one_photon_grid(int points = 257) {
  const GaussianMoments vac{0.5, 0.5};
  return photon_subtract(vacuum_grid(points), vac, {1.0, 0.5});
}

double mean_x(const WignerGrid& w) { return moment(w.raw(), 1, 0); }

}  // namespace

TEST_SUITE("wigner") {

TEST_CASE("vacuum peak value and normalization") {
  const GaussianMoments vac{0.5, 0.5};
  CHECK(gaussian_wigner_value(vac, 0.0, 0.0) == doctest::Approx(1.0 / kPi));
  const auto w = gaussian_wigner(vac, default_grid(vac));
  CHECK(std::abs(integrate(w.raw()) - 1.0) < 1e-6);
}

TEST_CASE("second moments round-trip through the grid") {
  const GaussianMoments m{0.07, 3.6};
  const auto w = gaussian_wigner(m, default_grid(m));
  CHECK(std::abs(moment(w.raw(), 2, 0) - m.var_x) < 1e-6);
  CHECK(std::abs(moment(w.raw(), 0, 2) - m.var_p) < 1e-6);
}

TEST_CASE("too-small grid reports suggested bounds") {
  const GaussianMoments m{1.0, 1.0};
  GridSpec s{{-2.0, 2.0, 101}, {-8.0, 8.0, 101}};
  try {
    gaussian_wigner(m, s);
    FAIL("expected GridError");
  } catch (const GridError& e) {
    CHECK(std::string(e.what()).find("suggest") != std::string::npos);
  }
}

TEST_CASE("malformed axes are rejected") {
  GridSpec s{{1.0, -1.0, 10}, {-1.0, 1.0, 10}};
  CHECK_THROWS_AS(s.validate(), GridError);
  GridSpec t{{-1.0, 1.0, 1}, {-1.0, 1.0, 10}};
  CHECK_THROWS_AS(t.validate(), GridError);
}

TEST_CASE("subtracting a photon from the vacuum gives |1>") {
  const auto w = one_photon_grid();
  const int mid = w.spec().x.n / 2;
  CHECK(w.at(mid, w.spec().p.n / 2) == doctest::Approx(-1.0 / kPi).epsilon(1e-9));
  CHECK(std::abs(integrate(w.raw()) - 1.0) < 1e-6);
  // W_1 = (2 r^2 - 1) e^{-r^2} / pi
  for (double x : {-1.5, -0.3, 0.8}) {
    for (double p : {-1.0, 0.2, 1.7}) {
      const double r2 = x * x + p * p;
      CHECK(subtracted_wigner_value({0.5, 0.5}, {1.0, 0.5}, x, p) ==
            doctest::Approx((2.0 * r2 - 1.0) / kPi * std::exp(-r2)));
    }
  }
}

TEST_CASE("subtracting from a pure squeezed state triples the P variance") {
  const GaussianMoments m{2.0, 0.125};
  const auto pre = gaussian_wigner(m, default_grid(m, 1.0));
  const auto post = photon_subtract(pre, m, {1.0, m.var_p});
  CHECK(moment(post.raw(), 0, 2) == doctest::Approx(3.0 * m.var_p).epsilon(1e-6));
}

TEST_CASE("without Bopp damping subtraction is classical") {
  const GaussianMoments m{0.8, 0.3};
  const auto pre = gaussian_wigner(m, default_grid(m, 0.0));
  const auto post = photon_subtract(pre, m, {0.0, m.var_p});
  CHECK(*std::min_element(post.values().begin(), post.values().end()) >= 0.0);
  for (int i = 0; i < post.spec().x.n; i += 37) {
    for (int j = 0; j < post.spec().p.n; j += 41) {
      const double p = post.spec().p.at(j);
      CHECK(post.at(i, j) == doctest::Approx(p * p * pre.at(i, j) / m.var_p).epsilon(1e-6));
    }
  }
}

TEST_CASE("any Bopp damping leaves negative values") {
  for (double c : {1.0, 0.6, 0.2}) {
    const GaussianMoments m{1.4, 0.2};
    const auto post = photon_subtract(gaussian_wigner(m, default_grid(m, c)), m, {c, m.var_p});
    CHECK(*std::min_element(post.values().begin(), post.values().end()) < 0.0);
    CHECK(std::abs(integrate(post.raw()) - 1.0) < 1e-6);
  }
}

TEST_CASE("subtraction requires the pre-click normalization") {
  const GaussianMoments m{0.5, 0.5};
  CHECK_THROWS_AS(photon_subtract(vacuum_grid(), m, {1.0, 0.4}), ValidationError);
  CHECK_THROWS_AS(photon_subtract(vacuum_grid(), m, {1.5, 0.5}), ValidationError);
}

TEST_CASE("displacement by zero is the identity") {
  const auto w = one_photon_grid();
  CHECK(displace_x(w, 0.0).values() == w.values());
}

TEST_CASE("displacement shifts the X mean") {
  const auto w = one_photon_grid();
  for (double theta : {0.013, -0.2, 0.5}) {
    CHECK(mean_x(displace_x(w, theta)) == doctest::Approx(theta).epsilon(1e-8));
  }
}

TEST_CASE("displacement round trip") {
  const auto w = one_photon_grid(512);
  const auto back = displace_x(displace_x(w, 0.0371), -0.0371);
  double worst = 0.0;
  for (std::size_t k = 0; k < w.values().size(); ++k) {
    worst = std::max(worst, std::abs(back.values()[k] - w.values()[k]));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("displacement off the grid is an error") {
  const auto w = vacuum_grid();
  CHECK_THROWS_AS(displace_x(w, 8.0), GridError);
}

TEST_CASE("vacuum marginal is the normal density with variance 1/2") {
  const auto w = vacuum_grid();
  const auto px = marginal_x(w);
  for (int i = 0; i < w.spec().x.n; i += 16) {
    const double x = w.spec().x.at(i);
    CHECK(std::abs(px[i] - std::exp(-x * x) / std::sqrt(kPi)) < 1e-9);
  }
}

TEST_CASE("one-photon marginal has a node at the origin") {
  const auto w = one_photon_grid();
  const auto px = marginal_x(w);
  double total = 0.0;
  const double h = w.spec().x.step();
  for (int i = 0; i < w.spec().x.n; ++i) {
    CHECK(std::abs(px[i] - oracle::one_photon_density(w.spec().x.at(i))) < 1e-8);
    total += px[i] * h;
  }
  CHECK(std::abs(total - 1.0) < 1e-6);
}

TEST_CASE("marginal of a displaced state is the shifted marginal") {
  const auto w = vacuum_grid();
  const double h = w.spec().x.step();
  const auto shifted = marginal_x(displace_x(w, 3.0 * h));
  const auto base = marginal_x(w);
  for (int i = 3; i < w.spec().x.n; ++i) CHECK(std::abs(shifted[i] - base[i - 3]) < 1e-12);
}

TEST_CASE("overlaps") {
  const auto vac = vacuum_grid();
  const auto one = one_photon_grid();
  CHECK(overlap(vac, vac) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(overlap(vac, one)) < 1e-9);
  CHECK(overlap(one, one) == doctest::Approx(1.0).epsilon(1e-9));
  const GaussianMoments m{0.9, 0.6};
  const auto g = gaussian_wigner(m, default_grid(m));
  CHECK(overlap(g, g) == doctest::Approx(1.0 / (2.0 * std::sqrt(m.product()))).epsilon(1e-8));
}

TEST_CASE("overlap needs identical grids") {
  CHECK_THROWS_AS(overlap(vacuum_grid(257), vacuum_grid(255)), GridError);
}

TEST_CASE("frame grids: trace rule carries hbar and canonical mapping restores it") {
  const double hbar = std::exp(-0.6);
  // Minimum-uncertainty state of the frame: Vx Vp = hbar^2 / 4.
  const GaussianMoments m{0.3 * hbar, hbar / 1.2};
  const auto w = gaussian_wigner(m, default_grid(m), hbar);
  CHECK(overlap(w, w) == doctest::Approx(1.0).epsilon(1e-8));
  const auto c = to_canonical(w, balanced_scale(m, hbar));
  CHECK(c.hbar() == 1.0);
  CHECK(std::abs(integrate(c.raw()) - 1.0) < 1e-9);
  CHECK(moment(c.raw(), 2, 0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(moment(c.raw(), 0, 2) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("csv dump") {
  PhaseSpaceGrid g{{{-1.0, 1.0, 2}, {0.0, 0.5, 2}}, {0.1, 0.2, 0.3, 1.0 / 3.0}, 1.0};
  std::ostringstream os;
  write_csv(os, g);
  CHECK(os.str() == "x,p,value\n-1,0,0.1\n-1,0.5,0.2\n1,0,0.3\n1,0.5,0.333333333333\n");
}

TEST_CASE("binary dump round trip") {
  const auto w = one_photon_grid(33);
  std::stringstream ss;
  write_binary(ss, w.raw());
  CHECK(ss.str().size() == 8 + 5 * 8 + 2 * 8 + 33 * 33 * 8);
  const auto back = read_binary(ss);
  CHECK(back.spec == w.spec());
  CHECK(back.values == w.values());
  CHECK(back.hbar == w.hbar());
}

TEST_CASE("binary dump rejects foreign data") {
  std::stringstream ss("not a grid at all, definitely not");
  CHECK_THROWS_AS(read_binary(ss), GridError);
}

}

TEST_SUITE("airy") {

TEST_CASE("value at the origin") {
  CHECK(airy_ai(0.0) == doctest::Approx(0.3550280538878172).epsilon(1e-14));
  CHECK(std::abs(airy_ai(0.0) - oracle::airy_contour(0.0)) < 1e-12);
}

TEST_CASE("matches the contour-quadrature oracle on random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> z(-12.0, 8.0);
  for (int k = 0; k < 100; ++k) {
    const double v = z(rng);
    CAPTURE(v);
    CHECK(std::abs(airy_ai(v) - oracle::airy_contour(v)) < 1e-9);
  }
}

TEST_CASE("accuracy across the series/asymptotic seams") {
  for (double v : {-15.0, -9.5, -9.0, -8.99, 5.99, 6.0, 6.5, 15.0}) {
    CAPTURE(v);
    CHECK(std::abs(airy_ai(v) - oracle::airy_contour(v)) < 1e-10);
  }
}

TEST_CASE("monotone decay beyond z = 3") {
  double prev = airy_ai(3.0);
  for (double v = 3.1; v <= 15.0; v += 0.1) {
    const double a = airy_ai(v);
    CHECK(a > 0.0);
    CHECK(a < prev);
    prev = a;
  }
}

TEST_CASE("satisfies the Airy equation") {
  const double h = 1e-3;
  for (double v = -5.0; v <= 5.0; v += 0.25) {
    const double d2 = (airy_ai(v + h) - 2.0 * airy_ai(v) + airy_ai(v - h)) / (h * h);
    CHECK(std::abs(d2 - v * airy_ai(v)) < 1e-6);
  }
}

}

TEST_SUITE("phi_basis") {

TEST_CASE("zero phi is outside the domain") {
  CHECK_THROWS_AS(PhiState{0.0}.validate(), DomainError);
  CHECK_THROWS_AS(phi_wigner({0.0}, {{-1, 1, 3}, {-1, 1, 3}}), DomainError);
}

TEST_CASE("matches the brute-force Wigner transform of the momentum wavefunction") {
  for (double phi : {1.0 / 8.0, 1.0 / 16.0}) {
    double worst = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.75) {
      for (double p = -2.5; p <= 2.5; p += 0.625) {
        const double a = oracle::phi_wigner_bruteforce(phi, x, p, 30.0, 40000);
        worst = std::max(worst, std::abs(a - phi_wigner_value({phi}, x, p)));
      }
    }
    CAPTURE(phi);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("negative phi mirrors X") {
  for (double phi : {0.125, 0.0625, 2.0}) {
    for (double x : {-2.0, 0.3, 1.1}) {
      for (double p : {-1.0, 0.0, 0.7}) {
        CHECK(phi_wigner_value({-phi}, x, p) == doctest::Approx(phi_wigner_value({phi}, -x, p)));
      }
    }
  }
  CHECK(std::abs(phi_wigner_value({-0.0625}, 0.4, 0.9) -
                 oracle::phi_wigner_bruteforce(-0.0625, 0.4, 0.9, 30.0, 40000)) < 1e-4);
}

TEST_CASE("grid sampling agrees with the point evaluator") {
  const GridSpec s{{-2.0, 2.0, 9}, {-1.0, 1.0, 5}};
  const auto g = phi_wigner({0.125}, s);
  CHECK(g.hbar == 1.0);
  CHECK(g.at(3, 1) == phi_wigner_value({0.125}, s.x.at(3), s.p.at(1)));
}

}
