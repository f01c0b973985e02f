#include "hybridmeas/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "hybridmeas/errors.hpp"

namespace hybridmeas {

namespace {

constexpr double kClampFloor = -1e-8;
constexpr double kSkipSum = 1e-12;

double tw(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

// psi_n(x) for n = 0..dim-1, stable three-term recurrence.
void hermite_functions(double x, int dim, double* out) {
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (dim > 1) out[1] = std::sqrt(2.0) * x * out[0];
  for (int n = 1; n + 1 < dim; ++n) {
    out[n + 1] = std::sqrt(2.0 / (n + 1)) * x * out[n] - std::sqrt(static_cast<double>(n) / (n + 1)) * out[n - 1];
  }
}

// Lagrange interpolation of column data f(x_k) (uniform nodes) at x; zero
// outside the axis.
struct AxisInterpolator {
  const GridAxis& axis;
  int stencil = 7;

  // Fills `first` and `weights` for position x; returns false if x lies
  // outside the axis.
  bool weights(double x, int& first, std::vector<double>& w) const {
    if (x < axis.min || x > axis.max) return false;
    const double u = (x - axis.min) / axis.step();
    const int left = (stencil - 1) / 2;
    first = static_cast<int>(std::lround(u)) - left;
    first = std::clamp(first, 0, axis.n - stencil);
    w.assign(stencil, 1.0);
    for (int k = 0; k < stencil; ++k) {
      for (int m = 0; m < stencil; ++m) {
        if (m != k) w[k] *= (u - (first + m)) / static_cast<double>(k - m);
      }
    }
    return true;
  }
};

}  // namespace

CMatrix multiply(const CMatrix& a, const CMatrix& b) {
  if (a.cols != b.rows) throw ValidationError({"matrix shapes do not match"});
  CMatrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      const cplx* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
      cplx* crow = &c.data[static_cast<std::size_t>(i) * c.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

CMatrix adjoint(const CMatrix& a) {
  CMatrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) t(j, i) = std::conj(a(i, j));
  }
  return t;
}

double FockDensityMatrix::trace() const {
  double t = 0.0;
  for (int n = 0; n < dim; ++n) t += elements(n, n).real();
  return t;
}

double FockDensityMatrix::purity() const {
  double s = 0.0;
  for (const cplx& v : elements.data) s += std::norm(v);
  return s;
}

FockDensityMatrix reconstruct(const WignerGrid& w, int n_max, const ReconstructOptions& opts) {
  if (n_max < FockDensityMatrix::kTailCount) {
    throw ValidationError({"n_max must be at least " + std::to_string(FockDensityMatrix::kTailCount)});
  }
  const int dim = n_max + 1;

  double scale = 0.0;
  if (opts.x_scale) {
    scale = *opts.x_scale;
  } else {
    const double mx2 = moment(w.raw(), 2, 0);
    const double mp2 = moment(w.raw(), 0, 2);
    if (!(mx2 > 0.0 && mp2 > 0.0)) throw NumericalError("grid second moments are not positive");
    scale = std::sqrt(w.hbar()) * std::pow(mx2 / mp2, 0.25);
  }
  const WignerGrid cw = to_canonical(w, scale);
  const GridSpec& s = cw.spec();

  // Fine position lattice x_i = i h, |i| <= M, resolving both the Hermite
  // functions and the state's momentum content.
  const double hermite_extent = std::sqrt(2.0 * n_max + 1.0);
  const double p_extent = std::max(std::abs(s.p.min), std::abs(s.p.max));
  const double h = 2.0 * std::numbers::pi / (1.2 * (hermite_extent + p_extent));
  const double x_extent =
      std::min(hermite_extent + 6.0, std::max(std::abs(s.x.min), std::abs(s.x.max)));
  const int big_m = static_cast<int>(std::ceil(x_extent / h));
  const int f = 2 * big_m + 1;

  // W interpolated to the midpoints xbar = (i + j) h / 2, index q = i + j + 2M.
  const int nq = 4 * big_m + 1;
  std::vector<double> wbar(static_cast<std::size_t>(nq) * s.p.n, 0.0);
  {
    AxisInterpolator interp{s.x, std::min(7, s.x.n)};
    std::vector<double> wts;
    for (int q = 0; q < nq; ++q) {
      const double xbar = 0.5 * (q - 2 * big_m) * h;
      int first = 0;
      if (!interp.weights(xbar, first, wts)) continue;
      double* row = &wbar[static_cast<std::size_t>(q) * s.p.n];
      for (int k = 0; k < interp.stencil; ++k) {
        for (int j = 0; j < s.p.n; ++j) row[j] += wts[k] * cw.at(first + k, j);
      }
    }
  }

  // R(q, l) = ∫ W(xbar_q, p) e^{i p l h} dp for l >= 0 and |q - 2M| + l <= 2M.
  // The p sum is periodic in the separation with period 2 pi / hp, so
  // separations beyond half a period are aliased and set to zero; a grid that
  // resolves the state has no coherence left there.
  const double hp = s.p.step();
  const int l_alias = static_cast<int>(std::floor(std::numbers::pi / (hp * h)));
  const int nl = std::min(2 * big_m, l_alias) + 1;
  std::vector<cplx> phase(static_cast<std::size_t>(nl) * s.p.n);
  for (int l = 0; l < nl; ++l) {
    for (int j = 0; j < s.p.n; ++j) {
      phase[static_cast<std::size_t>(l) * s.p.n + j] =
          std::polar(tw(j, s.p.n) * hp, s.p.at(j) * l * h);
    }
  }
  std::vector<cplx> kernel(static_cast<std::size_t>(nq) * nl);
  for (int q = 0; q < nq; ++q) {
    const double* row = &wbar[static_cast<std::size_t>(q) * s.p.n];
    const int lmax = std::min(nl - 1, 2 * big_m - std::abs(q - 2 * big_m));
    for (int l = 0; l <= lmax; ++l) {
      const cplx* ph = &phase[static_cast<std::size_t>(l) * s.p.n];
      cplx acc{};
      for (int j = 0; j < s.p.n; ++j) acc += row[j] * ph[j];
      kernel[static_cast<std::size_t>(q) * nl + l] = acc;
    }
  }

  CMatrix rho_x(f, f);
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < f; ++j) {
      const int q = i + j;
      const int l = i - j;
      if (std::abs(l) >= nl) continue;
      const cplx v = kernel[static_cast<std::size_t>(q) * nl + std::abs(l)];
      rho_x(i, j) = l >= 0 ? v : std::conj(v);
    }
  }

  CMatrix psi(dim, f);
  CMatrix psi_t(f, dim);
  std::vector<double> col(dim);
  for (int i = 0; i < f; ++i) {
    hermite_functions((i - big_m) * h, dim, col.data());
    for (int n = 0; n < dim; ++n) {
      psi(n, i) = col[n] * h;
      psi_t(i, n) = col[n] * h;
    }
  }
  CMatrix rho = multiply(multiply(psi, rho_x), psi_t);

  FockDensityMatrix out;
  out.dim = dim;
  out.x_scale = scale;
  out.elements = CMatrix(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int m = 0; m < dim; ++m) out.elements(n, m) = 0.5 * (rho(n, m) + std::conj(rho(m, n)));
  }
  const double tr = out.trace();
  out.trace_deficit = 1.0 - tr;
  for (int n = dim - FockDensityMatrix::kTailCount; n < dim; ++n) {
    out.tail_mass += out.elements(n, n).real();
  }
  if (out.tail_mass > opts.tail_tol) {
    std::ostringstream os;
    os << "Fock tail above n = " << dim - FockDensityMatrix::kTailCount << " holds " << out.tail_mass
       << " (> " << opts.tail_tol << "); increase n_max beyond " << n_max;
    throw CutoffError(os.str(), out.tail_mass);
  }
  if (std::abs(out.trace_deficit) > opts.trace_tol) {
    std::ostringstream os;
    os << "reconstructed trace deficit " << out.trace_deficit << " exceeds " << opts.trace_tol
       << " at n_max " << n_max << "; increase n_max or refine the grid";
    throw CutoffError(os.str(), out.tail_mass);
  }
  for (cplx& v : out.elements.data) v /= tr;
  return out;
}

FockDensityMatrix reconstruct_auto(const WignerGrid& w, const ReconstructOptions& opts,
                                   int n_start, int n_limit) {
  int n = n_start;
  for (;;) {
    try {
      return reconstruct(w, n, opts);
    } catch (const CutoffError&) {
      if (n >= n_limit) throw;
      n = std::min(n_limit, static_cast<int>(std::ceil(1.5 * n)));
    }
  }
}

CMatrix quadrature_p(int n_max) {
  if (n_max < 1) throw ValidationError({"n_max must be >= 1"});
  CMatrix p(n_max + 1, n_max + 1);
  for (int n = 0; n < n_max; ++n) {
    const double r = std::sqrt((n + 1) / 2.0);
    p(n + 1, n) = cplx(0.0, r);   // i a^dagger
    p(n, n + 1) = cplx(0.0, -r);  // -i a
  }
  return p;
}

CMatrix quadrature_x(int n_max) {
  if (n_max < 1) throw ValidationError({"n_max must be >= 1"});
  CMatrix x(n_max + 1, n_max + 1);
  for (int n = 0; n < n_max; ++n) {
    const double r = std::sqrt((n + 1) / 2.0);
    x(n + 1, n) = r;
    x(n, n + 1) = r;
  }
  return x;
}

Eigensystem eigh(const CMatrix& h, double tol, int max_sweeps) {
  if (h.rows != h.cols) throw ValidationError({"eigh needs a square matrix"});
  const int n = h.rows;
  CMatrix a = h;
  CMatrix v(n, n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int i = 0; i < n; ++i) a(i, i) = a(i, i).real();

  auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) s += std::norm(a(i, j));
      }
    }
    return std::sqrt(s);
  };

  Eigensystem es;
  double off = off_norm();
  while (off >= tol) {
    if (es.sweeps >= max_sweeps) {
      std::ostringstream os;
      os << "Jacobi eigensolver stalled after " << es.sweeps << " sweeps (off-diagonal norm "
         << off << ", dim " << n << ")";
      throw NumericalError(os.str());
    }
    ++es.sweeps;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        const cplx e = apq / r;
        const cplx ec = std::conj(e);
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- U^dagger A U with U = diag(1, e^{-i arg apq}) * [[c, s], [-s, c]].
        for (int k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = c * akp - s * ec * akq;
          a(k, q) = s * akp + c * ec * akq;
        }
        for (int k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = c * apk - s * e * aqk;
          a(q, k) = s * apk + c * e * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (int k = 0; k < n; ++k) {
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = c * vkp - s * ec * vkq;
          v(k, q) = s * vkp + c * ec * vkq;
        }
      }
    }
    off = off_norm();
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i).real() > a(j, j).real(); });
  es.values.resize(n);
  es.vectors = CMatrix(n, n);
  for (int k = 0; k < n; ++k) {
    es.values[k] = a(order[k], order[k]).real();
    for (int i = 0; i < n; ++i) es.vectors(i, k) = v(i, order[k]);
  }
  return es;
}

Eigensystem eigh(const FockDensityMatrix& rho) { return eigh(rho.elements); }

QfiResult qfi_displacement_detailed(const FockDensityMatrix& rho) {
  Eigensystem es = eigh(rho);
  QfiResult out;
  out.min_eigenvalue = es.values.back();
  for (double& l : es.values) {
    if (l < kClampFloor) {
      std::ostringstream os;
      os << "density matrix eigenvalue " << l << " below " << kClampFloor
         << "; grid or cutoff misconfigured";
      throw NumericalError(os.str());
    }
    if (l < 0.0) {
      l = 0.0;
      ++out.clamped;
    }
  }
  const CMatrix pm = multiply(adjoint(es.vectors), multiply(quadrature_p(rho.dim - 1), es.vectors));
  double f = 0.0;
  for (int i = 0; i < rho.dim; ++i) {
    for (int j = 0; j < rho.dim; ++j) {
      const double sum = es.values[i] + es.values[j];
      if (sum < kSkipSum) continue;
      const double d = es.values[i] - es.values[j];
      f += d * d / sum * std::norm(pm(i, j));
    }
  }
  out.value = 2.0 * f / (rho.x_scale * rho.x_scale);
  return out;
}

double qfi_displacement(const FockDensityMatrix& rho) { return qfi_displacement_detailed(rho).value; }

void write_json(std::ostream& os, const FockDensityMatrix& rho) {
  // Hand-written so every number has 12 significant digits.
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  auto array = [&](const char* key, auto part) {
    os << ",\"" << key << "\":[";
    for (std::size_t i = 0; i < rho.elements.data.size(); ++i) {
      os << (i ? "," : "") << num(part(rho.elements.data[i]));
    }
    os << ']';
  };
  os << "{\"dim\":" << rho.dim << ",\"x_scale\":" << num(rho.x_scale)
     << ",\"trace_deficit\":" << num(rho.trace_deficit);
  array("real", [](const cplx& v) { return v.real(); });
  array("imag", [](const cplx& v) { return v.imag(); });
  os << "}\n";
}

}  // namespace hybridmeas
