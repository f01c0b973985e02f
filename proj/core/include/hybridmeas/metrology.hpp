#pragma once

// Fisher information for sensing a displacement theta along X.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hybridmeas/core.hpp"
#include "hybridmeas/dynamics.hpp"
#include "hybridmeas/wigner.hpp"

namespace hybridmeas {

/// theta -> pdf sampled on a fixed outcome grid.
using PdfFamily = std::function<std::vector<double>(double theta)>;

struct FamilyOptions {
  double dtheta = 1e-4;
  double floor = 1e-12;      ///< integrand zeroed where all three samples are below this
  double drift_tol = 1e-5;   ///< allowed normalization difference between samples
};

/// ∫ (d p / d theta)^2 / p at theta = 0, evaluated as 4 ∫ (d sqrt(p) / d theta)^2
/// from samples at 0 and +-dtheta;
/// `measure` holds the quadrature weight of each outcome node.
double cfi_from_family(const PdfFamily& family, const std::vector<double>& measure,
                       const FamilyOptions& opts = {});

/// Homodyne (X-basis) CFI of a grid state: family marginal_x(displace_x(w, theta)).
double cfi_homodyne(const WignerGrid& w, const FamilyOptions& opts = {});

/// Outcome grid for the phi-basis measurement in canonical units: trapezoid
/// weights over sorted nodes.
struct PhiGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// `per_sign` log-spaced magnitudes in [phi_min, phi_max] on each side plus
/// `inner` uniform nodes on [0, phi_min) (none when inner = 0).
PhiGrid make_phi_grid(double phi_min = 1e-3, double phi_max = 10.0, int per_sign = 400,
                      int inner = 16);

struct PhiCfi {
  double cfi = 0.0;       ///< physical units
  double norm = 0.0;      ///< ∫ p(phi) dphi on the final grid
  double tail = 0.0;      ///< CFI share from |phi| > phi_max / 2
  double phi_max = 0.0;   ///< canonical
  int points = 0;
};

/// True if the canonical grid `spec` samples the Airy fringes of W_phi with
/// at least six points per local wavelength over |x| <= x_support,
/// |p| <= p_support.
bool phi_resolved(const GridSpec& spec, double x_support, double p_support, double phi);

/// p(phi; theta) = 2 pi ∫∫ W_phi W_theta on the grid, after mapping the
/// displaced state to canonical coordinates with `scale` (default: the
/// balanced scale of the grid's own second moments). Every
/// node must be resolved over 7 sd of the mapped state, else GridError.
PhiCfi cfi_phi(const WignerGrid& w, const PhiGrid& phis, const FamilyOptions& opts = {},
               int jobs = 1, std::optional<double> scale = std::nullopt);

struct PhiOptions {
  double phi_min = 1e-3;
  double phi_max = 10.0;
  int per_sign = 400;
  double tail_tol = 0.01;
  double phi_limit = 1e4;
  int jobs = 1;
  FamilyOptions family;
};

/// phi-basis densities in canonical units from the momentum-space kernel:
/// zero-mean Gaussian rho with variances (vx, vp), and P rho P / vp, both
/// displaced by theta along X.
double phi_density_gaussian(double vx, double vp, double phi, double theta);
double phi_density_subtracted(double vx, double vp, double phi, double theta);

/// CFI of the phi basis for the photon-subtracted Gaussian with pre-click
/// moments `m` in a frame with commutator scale `hbar`, from the
/// semi-analytic momentum-space kernel. The phi range doubles until the tail
/// share drops below tail_tol; throws NumericalError with the measured tail
/// if phi_limit is reached first.
PhiCfi cfi_phi_subtracted(const GaussianMoments& m, double hbar, const PhiOptions& opts = {});

/// Displacement QFI of a grid state via automatic Fock reconstruction.
struct QfiReport {
  double qfi = 0.0;
  int dim = 0;
  double trace_deficit = 0.0;
  int clamped = 0;
};
QfiReport qfi(const WignerGrid& w);

/// Single-mode Gaussian displacement QFI along X: 1/Vx.
double gaussian_qfi(const GaussianMoments& m);

enum class PostSelection { Immediate, Threshold };
std::string_view to_string(PostSelection mode) noexcept;

struct ScenarioSpec {
  ProtocolParams params;
  std::vector<double> t1_grid;
  PostSelection mode = PostSelection::Immediate;
  bool gaussian_only = true;
  bool non_gaussian = true;
  bool with_qfi = false;  ///< fig4 only; fig5 always computes the QFI
  ThresholdOptions threshold;
  PhiOptions phi;
  GridOptions grid;
  int jobs = 1;

  void validate() const;
};

struct FisherReport {
  double t1 = 0.0;
  double t2 = 0.0;
  PostSelection mode = PostSelection::Immediate;
  bool reachable = true;
  std::optional<double> cfi_gaussian;
  std::optional<double> cfi_homodyne;
  std::optional<double> cfi_phi;
  std::optional<double> qfi;
  std::optional<double> phi_norm;
  std::optional<double> phi_tail;
  int fock_dim = 0;
  std::vector<std::string> flags;

  /// True when every computed CFI is within rel_slack of the QFI.
  bool cfi_within_qfi(double rel_slack = 1e-3) const;
};

/// Photon-subtracted (post-click) Wigner grid for the protocol point p.
WignerGrid post_click_wigner(const PreClickState& s, const GridOptions& grid = {});

/// Rotated phase-I Gaussian (no photon detection) on its default grid.
WignerGrid gaussian_only_wigner(const ProtocolParams& p, const GridOptions& grid = {});

/// Per t1: homodyne CFI of the phase-I-only Gaussian and of the
/// photon-subtracted state at t2 = 0 (Immediate) or the threshold t2.
std::vector<FisherReport> scenario_fig4(const ScenarioSpec& spec);

/// Per t1 at t2 = 0: homodyne CFI, phi-basis CFI and QFI of the
/// photon-subtracted state.
std::vector<FisherReport> scenario_fig5(const ScenarioSpec& spec);

/// t1 grids used by the figure commands.
std::vector<double> default_fig4_t1_grid();
std::vector<double> default_fig5_t1_grid();

}  // namespace hybridmeas
