#include <cmath>
#include <numbers>

#include "hybridmeas/wigner.hpp"

namespace hybridmeas {

namespace {

// Ai(0) and -Ai'(0).
constexpr long double kC1 = 0.355028053887817239260063186004183176L;
constexpr long double kC2 = 0.258819403792806798405183560189203963L;

// The series is used on [kSeriesLow, kSeriesHigh]. On the oscillatory side
// it is carried past |z| = 6 because the asymptotic series only reaches
// ~1e-9 there (smallest term ~ e^{-2 zeta}).
constexpr double kSeriesLow = -9.0;
constexpr double kSeriesHigh = 6.0;

double maclaurin(double zd) {
  const long double z = zd;
  const long double z3 = z * z * z;
  long double f = 1.0L;
  long double g = z;
  long double a = 1.0L;
  long double b = z;
  for (int k = 1; k < 200; ++k) {
    a *= z3 / ((3.0L * k - 1.0L) * (3.0L * k));
    b *= z3 / ((3.0L * k) * (3.0L * k + 1.0L));
    f += a;
    g += b;
    if (std::fabs(a) + std::fabs(b) < 1e-22L * (std::fabs(f) + std::fabs(g))) break;
  }
  return static_cast<double>(kC1 * f - kC2 * g);
}

// u_k of the Airy asymptotic expansions (DLMF 9.7.2).
double next_u(double u, int k) {
  return u * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) /
         ((2.0 * k - 1.0) * 216.0 * k);
}

double asymptotic_positive(double z) {
  const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
  double sum = 1.0;
  double u = 1.0;
  double term_prev = 1.0;
  for (int k = 1; k < 60; ++k) {
    u = next_u(u, k);
    const double term = u / std::pow(zeta, k);
    if (term > term_prev || term < 1e-17) break;
    sum += (k % 2 ? -term : term);
    term_prev = term;
  }
  return std::exp(-zeta) / (2.0 * std::sqrt(std::numbers::pi) * std::pow(z, 0.25)) * sum;
}

double asymptotic_negative(double x) {
  const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
  double even = 1.0;
  double odd = 0.0;
  double u = 1.0;
  double term_prev = 1.0;
  for (int k = 1; k < 60; ++k) {
    u = next_u(u, k);
    const double term = u / std::pow(zeta, k);
    if (term > term_prev || term < 1e-17) break;
    // (-1)^m u_{2m} / zeta^{2m} and (-1)^m u_{2m+1} / zeta^{2m+1}.
    const int m = k / 2;
    const double signed_term = (m % 2 ? -term : term);
    if (k % 2) {
      odd += signed_term;
    } else {
      even += signed_term;
    }
    term_prev = term;
  }
  const double phase = zeta + std::numbers::pi / 4.0;
  return (std::sin(phase) * even - std::cos(phase) * odd) /
         (std::sqrt(std::numbers::pi) * std::pow(x, 0.25));
}

}  // namespace

double airy_ai(double z) {
  if (std::isnan(z)) return z;
  if (z >= kSeriesLow && z <= kSeriesHigh) return maclaurin(z);
  if (z > kSeriesHigh) return asymptotic_positive(z);
  return asymptotic_negative(-z);
}

}  // namespace hybridmeas
