#pragma once

// Shared domain types for the two-phase hybrid measurement protocol.
//
// Conventions: quadratures obey [X, P] = i with vacuum variance 1/2. The
// collective spin is mapped to a single bosonic mode (Holstein-Primakoff),
// so the spin coherent state is the vacuum. The Gaussian state is always
// zero-mean; displacement only enters later as the sensing parameter.

#include <array>
#include <string_view>

namespace hybridmeas {

/// Physical rates and times of one protocol run. Times are in the same unit
/// as 1/gamma (figures use gamma = 1).
struct ProtocolParams {
  double kappa = 1.0;        ///< measurement rate
  double gamma = 1.0;        ///< optical-pumping (photon scattering) rate
  int n_atoms = 500;         ///< N_A
  double eta = 1.0;          ///< detection efficiency in [0, 1]
  double t1 = 0.0;           ///< phase-I (homodyne) duration
  double t2 = 0.0;           ///< phase-II pre-click duration
  double p_threshold = 0.2;  ///< cumulative click-probability target in [0, 1)

  /// Throws ValidationError listing every violated invariant.
  void validate() const;

  bool operator==(const ProtocolParams&) const = default;
};

/// Zero-mean Gaussian state, fully described by the two quadrature variances.
struct GaussianMoments {
  double var_x = 0.5;
  double var_p = 0.5;

  /// Throws ValidationError unless both variances are finite and positive.
  void validate() const;

  double product() const noexcept { return var_x * var_p; }
  bool operator==(const GaussianMoments&) const = default;
};

/// Spin coherent state: the Holstein-Primakoff vacuum.
constexpr GaussianMoments initial_scs() noexcept { return {0.5, 0.5}; }

/// pi/2 rotation about J_x: exchanges the two quadratures.
constexpr GaussianMoments rotate_half_pi(const GaussianMoments& m) noexcept {
  return {m.var_p, m.var_x};
}

enum class StageTag { Initial, PhaseI, Rotated, PhaseII, PostClick };

std::string_view to_string(StageTag tag) noexcept;

/// Position in the protocol. Transitions only go forward through
/// Initial -> PhaseI -> Rotated -> PhaseII -> PostClick, and elapsed time
/// never decreases.
class ProtocolStage {
 public:
  constexpr ProtocolStage() = default;

  StageTag tag() const noexcept { return tag_; }
  double elapsed() const noexcept { return elapsed_; }

  /// Move to the next stage after spending `duration` in the current one.
  /// Throws ValidationError on out-of-order transitions or negative durations.
  ProtocolStage advance(StageTag next, double duration) const;

 private:
  constexpr ProtocolStage(StageTag tag, double elapsed) : tag_(tag), elapsed_(elapsed) {}

  StageTag tag_ = StageTag::Initial;
  double elapsed_ = 0.0;
};

inline constexpr std::array<StageTag, 5> kStageOrder = {
    StageTag::Initial, StageTag::PhaseI, StageTag::Rotated, StageTag::PhaseII,
    StageTag::PostClick};

}  // namespace hybridmeas
