#pragma once

// Moment equations of motion for the two protocol phases.
//
// Phase I (homodyne, duration t1), t measured from protocol start:
//   dVx/dt = kappa N/8 e^{-4 gamma t}            - 2 gamma Vx + gamma
//   dVp/dt = -kappa eta N/2 Vp^2                 - 2 gamma Vp + gamma
// Phase II (photon counting before the click), t measured from phase-II start:
//   dVx/dt = kappa (1 - eta/2) N/8 e^{-4 gamma (t + t1)} - 2 gamma Vx + gamma
//   dVp/dt = -kappa eta N/4 Vp^2                          - 2 gamma Vp + gamma
// The pumping part of both equations is the n = 2 case of the moment rule
// d<Q^n>/dt = -n gamma <Q^n> + gamma/2 n (n-1) <Q^{n-2}>.
//
// The variances live in the optical-pumping frame, in which the quadrature
// commutator shrinks to i e^{-2 gamma t}; see `frame_hbar`.

#include <functional>
#include <span>
#include <vector>

#include "hybridmeas/core.hpp"
#include "hybridmeas/integrator.hpp"

namespace hybridmeas {

struct MomentRates {
  double dvar_x = 0.0;
  double dvar_p = 0.0;
};

MomentRates phase1_rhs(const GaussianMoments& m, const ProtocolParams& p, double t);

/// `t` is the time since phase II started; p.t1 fixes the frame damping.
MomentRates phase2_rhs(const GaussianMoments& m, const ProtocolParams& p, double t);

/// Pumping-only part of either equation: -2 gamma <Q^2> + gamma.
double pumping_rate(double second_moment, double gamma);

struct TrajectorySample {
  double t = 0.0;
  double var_x = 0.0;
  double var_p = 0.0;
};

struct EvolutionResult {
  GaussianMoments moments;
  /// Uniform samples including both end points; empty unless requested.
  std::vector<TrajectorySample> trajectory;
  double elapsed = 0.0;
};

using MomentRhs = std::function<MomentRates(const GaussianMoments&, double)>;

/// RK4 with step halving (see StepControl). `t0` is passed through to rhs.
EvolutionResult integrate(const MomentRhs& rhs, const GaussianMoments& m0, double duration,
                          const StepControl& ctl = {}, double t0 = 0.0);

EvolutionResult evolve_phase1(const ProtocolParams& p, double duration,
                              const StepControl& ctl = {});

/// Starts from the rotated phase-I state.
EvolutionResult evolve_phase2(const GaussianMoments& rotated, const ProtocolParams& p,
                              double duration, const StepControl& ctl = {});

/// Commutator scale of the pumping frame after `elapsed` time:
/// [X, P] = i e^{-2 gamma elapsed}. Equals the Bopp damping factor.
double frame_hbar(double gamma, double elapsed);

/// Everything known about the state just before the photon click.
struct PreClickState {
  GaussianMoments after_phase1;
  GaussianMoments rotated;
  GaussianMoments pre_click;
  ProtocolStage stage;       ///< entered PhaseII after t1
  double bopp_damping = 1.0; ///< e^{-2 gamma (t1 + t2)}
};

/// Runs SCS -> phase I (p.t1) -> rotation -> phase II (p.t2).
PreClickState evolve_protocol(const ProtocolParams& p, const StepControl& ctl = {});

/// Rate parameter of the phase-I Riccati solution,
/// zeta = sqrt(2 gamma^2 + kappa eta N gamma); the transient decays as
/// coth(zeta t / sqrt 2).
double squeezing_zeta(const ProtocolParams& p);

/// Closed-form variances after the full protocol (phase I for p.t1, rotation,
/// phase II for p.t2). Requires gamma > 0; throws DomainError otherwise.
GaussianMoments closed_form_final(const ProtocolParams& p);

/// Click rate eta kappa N <P^2> / 8.
double detection_rate(const GaussianMoments& m, const ProtocolParams& p);

/// 1 - exp(-integral of detection_rate) over [0, t2] of phase II, after a
/// phase I of length t1.
double detection_probability(double t1, double t2, const ProtocolParams& p,
                             const StepControl& ctl = {});

struct ThresholdOptions {
  double horizon = 50.0;  ///< give up beyond this phase-II duration
  double rel_tol = 1e-6;
};

struct ThresholdResult {
  bool reachable = false;
  double t2 = 0.0;                    ///< valid when reachable
  double probability_at_horizon = 0;  ///< filled when unreachable
};

/// Smallest t2 whose cumulative click probability reaches p.p_threshold.
ThresholdResult t2_for_threshold(double t1, const ProtocolParams& p,
                                 const ThresholdOptions& opts = {});

struct TimeBudget {
  double t1 = 0.0;
  double t2 = 0.0;
  double total = 0.0;
  bool reachable = true;
};

/// One TimeBudget per grid point. `jobs` > 1 fans the grid out over threads.
std::vector<TimeBudget> total_time_curve(std::span<const double> t1_grid,
                                         const ProtocolParams& p,
                                         const ThresholdOptions& opts = {}, int jobs = 1);

/// t1 grid of the total-time command: steps of 1e-4 up to 0.02 (where the
/// threshold minimum sits for kappa ~ gamma), then coarser out to 2.
std::vector<double> default_fig3_t1_grid();

}  // namespace hybridmeas
