#pragma once

// Truncated Fock-space density matrices reconstructed from Wigner grids.
//
// Frame grids (hbar != 1) are first mapped to canonical coordinates with
// X = a X~. The balanced choice of a keeps squeezed states low in photon
// number. All matrices here are in the canonical Fock basis; `x_scale`
// records a so that physical displacement sensitivities can be recovered.

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hybridmeas/wigner.hpp"

namespace hybridmeas {

using cplx = std::complex<double>;

/// Dense row-major complex matrix.
struct CMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<cplx> data;

  CMatrix() = default;
  CMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

  cplx& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  const cplx& operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols + j];
  }
};

CMatrix multiply(const CMatrix& a, const CMatrix& b);
CMatrix adjoint(const CMatrix& a);

struct FockDensityMatrix {
  int dim = 0;            ///< n_max + 1
  CMatrix elements;
  double trace_deficit = 0.0;  ///< 1 - Tr(rho) before renormalization
  double x_scale = 1.0;        ///< X_physical = x_scale * X_canonical
  double tail_mass = 0.0;      ///< sum of the last kTailCount diagonal entries
  std::vector<std::string> audit;

  static constexpr int kTailCount = 5;

  cplx operator()(int n, int m) const { return elements(n, m); }
  double trace() const;
  double purity() const;
};

struct ReconstructOptions {
  double tail_tol = 1e-5;
  double trace_tol = 1e-4;
  /// Overrides the balanced canonical scale.
  std::optional<double> x_scale;
};

/// rho_nm from the Wigner grid via the separable kernel
/// rho(x + y/2, x - y/2) = ∫ W(x, p) e^{i p y} dp and Hermite-function
/// projection. Throws CutoffError if the diagonal tail above n_max - 5
/// exceeds tail_tol or the trace deficit exceeds trace_tol.
FockDensityMatrix reconstruct(const WignerGrid& w, int n_max, const ReconstructOptions& opts = {});

/// Starts at n_max = 64 and grows by 1.5x until the tail and trace rules hold.
FockDensityMatrix reconstruct_auto(const WignerGrid& w, const ReconstructOptions& opts = {},
                                   int n_start = 64, int n_limit = 400);

/// P = i(a^dagger - a)/sqrt 2 and X = (a + a^dagger)/sqrt 2, dimension n_max + 1.
CMatrix quadrature_p(int n_max);
CMatrix quadrature_x(int n_max);

struct Eigensystem {
  std::vector<double> values;  ///< descending
  CMatrix vectors;             ///< columns
  int sweeps = 0;
};

/// Cyclic Jacobi for Hermitian matrices. Throws NumericalError if the
/// off-diagonal norm is not below `tol` within `max_sweeps`.
Eigensystem eigh(const CMatrix& h, double tol = 1e-12, int max_sweeps = 60);
Eigensystem eigh(const FockDensityMatrix& rho);

struct QfiResult {
  double value = 0.0;     ///< physical units (divided by x_scale^2)
  int clamped = 0;        ///< eigenvalues in [-1e-8, 0) set to 0
  double min_eigenvalue = 0.0;
};

/// F_Q = 2 sum (l - l')^2 / (l + l') |<l|P|l'>|^2 for displacements along X.
/// Terms with l + l' < 1e-12 are skipped. Eigenvalues below -1e-8 throw.
QfiResult qfi_displacement_detailed(const FockDensityMatrix& rho);
double qfi_displacement(const FockDensityMatrix& rho);

/// {"dim": d, "x_scale": a, "trace_deficit": t, "real": [...], "imag": [...]},
/// row-major.
void write_json(std::ostream& os, const FockDensityMatrix& rho);

}  // namespace hybridmeas
