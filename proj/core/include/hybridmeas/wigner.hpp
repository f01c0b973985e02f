#pragma once

// Phase-space grids and the Wigner functions used by the protocol.
//
// Every grid carries the commutator scale hbar of its coordinates:
// [X, P] = i hbar, and the trace rule reads Tr[A B] = 2 pi hbar ∫∫ W_A W_B.
// States produced by the protocol live in the pumping frame, hbar = e^{-2 gamma t};
// the phi-basis functions and the Fock reconstruction work in canonical
// coordinates (hbar = 1). `to_canonical` maps between the two.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hybridmeas/core.hpp"

namespace hybridmeas {

struct GridAxis {
  double min = -1.0;
  double max = 1.0;
  int n = 2;

  double step() const noexcept { return (max - min) / static_cast<double>(n - 1); }
  double at(int i) const noexcept { return min + step() * static_cast<double>(i); }
  /// Throws GridError unless finite, min < max and n >= 2.
  void validate(const char* name) const;
  bool operator==(const GridAxis&) const = default;
};

struct GridSpec {
  GridAxis x;
  GridAxis p;

  void validate() const;
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(x.n) * static_cast<std::size_t>(p.n);
  }
  bool operator==(const GridSpec&) const = default;
};

struct GridOptions {
  int points = 512;
  double span_sd = 8.0;
};

/// ±span_sd standard deviations per axis. With a Bopp damping factor the
/// widths are taken from the photon-subtracted moments
/// (Vx + c^2/(2 Vp), 3 Vp), which are never narrower than the Gaussian ones.
GridSpec default_grid(const GaussianMoments& m, std::optional<double> bopp_damping = std::nullopt,
                      const GridOptions& opts = {});

/// Sampled real function on a grid, row-major with x as the slow index:
/// values[i * p.n + j] = f(x_i, p_j).
struct PhaseSpaceGrid {
  GridSpec spec;
  std::vector<double> values;
  double hbar = 1.0;

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * spec.p.n + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * spec.p.n + j]; }
};

/// Trapezoid-rule ∫∫ f dX dP.
double integrate(const PhaseSpaceGrid& g);

/// Trapezoid-rule ∫∫ x^a p^b f dX dP.
double moment(const PhaseSpaceGrid& g, int power_x, int power_p);

/// A PhaseSpaceGrid that integrates to 1 within `tol` and is finite
/// everywhere; checked on construction.
class WignerGrid {
 public:
  static constexpr double kNormTol = 1e-6;

  explicit WignerGrid(PhaseSpaceGrid g, double tol = kNormTol);

  const GridSpec& spec() const noexcept { return g_.spec; }
  const std::vector<double>& values() const noexcept { return g_.values; }
  double hbar() const noexcept { return g_.hbar; }
  double at(int i, int j) const { return g_.at(i, j); }
  const PhaseSpaceGrid& raw() const noexcept { return g_; }

 private:
  PhaseSpaceGrid g_;
};

double gaussian_wigner_value(const GaussianMoments& m, double x, double p);

/// exp(-X^2/2Vx - P^2/2Vp) / (2 pi sqrt(Vx Vp)). Throws GridError with the
/// suggested bounds if the grid spans less than ±6 sd or fails the
/// normalization check.
WignerGrid gaussian_wigner(const GaussianMoments& m, const GridSpec& spec, double hbar = 1.0);

struct SubtractionContext {
  double bopp_damping = 1.0;  ///< c = e^{-2 gamma (t1 + t2)}
  double norm = 0.5;          ///< <P^2> of the pre-click state

  void validate() const;
};

/// [P^2 + (c^2/4)(X^2/Vx^2 - 1/Vx)] W_pre / Vp at one point.
double subtracted_wigner_value(const GaussianMoments& m, const SubtractionContext& ctx, double x,
                               double p);

/// Applies the Bopp form P^2 + (c^2/4) d^2/dX^2 analytically to the Gaussian
/// `pre` (moments m) and renormalizes on the grid. Output hbar equals the
/// input hbar.
WignerGrid photon_subtract(const WignerGrid& pre, const GaussianMoments& m,
                           const SubtractionContext& ctx);

/// W(X, P) -> W(X - theta, P). Off-grid shifts use Lagrange interpolation of
/// degree `stencil - 1` along X. Throws GridError if more than `clip_tol` of
/// the absolute mass would leave the grid.
WignerGrid displace_x(const WignerGrid& w, double theta, int stencil = 7, double clip_tol = 1e-8);

/// p(x) = ∫ W(x, P) dP on the x axis; negative round-off is clamped to 0.
std::vector<double> marginal_x(const WignerGrid& w);

/// Airy function Ai(z) for real z.
double airy_ai(double z);

struct PhiState {
  double phi = 1.0;
  void validate() const;  ///< DomainError unless finite and nonzero
};

/// Wigner function of the delta-normalized eigenstate |phi> of P^-1 X P^-1
/// in canonical coordinates:
///   W_phi(x, p) = |s|/(2 pi) (2 p^2 - x/phi) Ai(s (phi p^2 - x)),
///   s = (4/phi)^{1/3} (real signed cube root).
double phi_wigner_value(const PhiState& s, double x, double p);

/// phi_wigner_value on a grid (hbar = 1). Not normalizable.
PhaseSpaceGrid phi_wigner(const PhiState& s, const GridSpec& spec);

/// 2 pi hbar ∫∫ W_a W_b (trapezoid). Throws GridError unless the grids and
/// hbar agree.
double overlap(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b);
double overlap(const WignerGrid& a, const WignerGrid& b);

/// Position scale that balances the two canonical variances:
/// a = sqrt(hbar) (Vx/Vp)^{1/4}.
double balanced_scale(const GaussianMoments& m, double hbar);

/// Maps frame coordinates to canonical ones, X = a X~, P = (hbar/a) P~,
/// W~ = hbar W. The result has hbar = 1 and stays normalized.
WignerGrid to_canonical(const WignerGrid& w, double scale);

/// CSV rows "x,p,value" with a header line, 12 significant digits.
void write_csv(std::ostream& os, const PhaseSpaceGrid& g);

/// Binary dump, little-endian:
///   8 bytes  magic "HMWGRID1"
///   f64 x.min, x.max, p.min, p.max, hbar
///   u64 x.n, p.n
///   f64 values[x.n * p.n], x index slow
void write_binary(std::ostream& os, const PhaseSpaceGrid& g);
PhaseSpaceGrid read_binary(std::istream& is);

}  // namespace hybridmeas
