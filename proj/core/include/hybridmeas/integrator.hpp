#pragma once

// Fixed-step classical RK4 with successive step halving.
//
// The interval is integrated with n steps and again with 2n steps; n keeps
// doubling until the two end states agree to `rel_tol` in every component.
// The finer solution is returned. A pass that goes non-finite is retried
// with twice the steps. Trajectory samples are taken on a uniform
// time grid, so the step count is always a multiple of the sample count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "hybridmeas/errors.hpp"

namespace hybridmeas {

struct StepControl {
  int initial_steps = 64;
  double rel_tol = 1e-9;
  /// Components whose magnitude is below this are compared absolutely.
  double abs_floor = 1e-12;
  int max_halvings = 22;
  /// Number of uniform trajectory intervals; 0 keeps only the end points.
  int samples = 0;
};

template <std::size_t N>
using OdeState = std::array<double, N>;

template <std::size_t N>
struct OdeSolution {
  OdeState<N> final{};
  std::vector<double> times;
  std::vector<OdeState<N>> states;
  long steps = 0;
};

namespace detail {

template <std::size_t N>
OdeState<N> axpy(const OdeState<N>& y, double h, const OdeState<N>& k) {
  OdeState<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h * k[i];
  return out;
}

template <std::size_t N>
bool all_finite(const OdeState<N>& y) {
  for (double v : y) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// One pass with a fixed number of steps. Throws NumericalError on the first
// non-finite state.
template <std::size_t N, class Rhs>
OdeSolution<N> rk4_pass(Rhs& rhs, const OdeState<N>& y0, double t0, double duration,
                        long steps, int samples) {
  OdeSolution<N> sol;
  sol.steps = steps;
  const double h = duration / static_cast<double>(steps);
  const long stride = samples > 0 ? steps / samples : steps;
  OdeState<N> y = y0;
  if (samples > 0) {
    sol.times.push_back(t0);
    sol.states.push_back(y);
  }
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + static_cast<double>(s) * h;
    const OdeState<N> k1 = rhs(y, t);
    const OdeState<N> k2 = rhs(axpy(y, 0.5 * h, k1), t + 0.5 * h);
    const OdeState<N> k3 = rhs(axpy(y, 0.5 * h, k2), t + 0.5 * h);
    const OdeState<N> k4 = rhs(axpy(y, h, k3), t + h);
    OdeState<N> next;
    for (std::size_t i = 0; i < N; ++i) {
      next[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!all_finite(next)) {
      std::ostringstream os;
      os << "non-finite ODE state in step " << s << " of " << steps << "; last good time "
         << t;
      throw NumericalError(os.str());
    }
    y = next;
    if (samples > 0 && (s + 1) % stride == 0) {
      sol.times.push_back(t0 + static_cast<double>(s + 1) * h);
      sol.states.push_back(y);
    }
  }
  if (samples > 0) {
    // Pin the last sample to the exact end time.
    sol.times.back() = t0 + duration;
  }
  sol.final = y;
  return sol;
}

}  // namespace detail

/// Integrate y' = rhs(y, t) over [t0, t0 + duration].
template <std::size_t N, class Rhs>
OdeSolution<N> integrate_rk4(Rhs&& rhs, const OdeState<N>& y0, double duration,
                             const StepControl& ctl = {}, double t0 = 0.0) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw ValidationError({"integration duration must be finite and >= 0"});
  }
  if (ctl.initial_steps < 1 || ctl.samples < 0) {
    throw ValidationError({"step control needs initial_steps >= 1 and samples >= 0"});
  }
  if (duration == 0.0) {
    OdeSolution<N> sol;
    sol.final = y0;
    if (ctl.samples > 0) {
      sol.times.push_back(t0);
      sol.states.push_back(y0);
    }
    return sol;
  }

  const long per_sample = ctl.samples > 0
                              ? std::max<long>(1, (ctl.initial_steps + ctl.samples - 1) / ctl.samples)
                              : ctl.initial_steps;
  const long base = ctl.samples > 0 ? static_cast<long>(ctl.samples) : 1;
  long steps = base * per_sample;

  // A too-coarse first pass can blow up on stiff Riccati terms; refine
  // until it stays finite, and only report the failure when refinement runs out.
  int k = 0;
  OdeSolution<N> coarse;
  for (;; ++k) {
    try {
      coarse = detail::rk4_pass<N>(rhs, y0, t0, duration, steps, ctl.samples);
      break;
    } catch (const NumericalError&) {
      if (k >= ctl.max_halvings) throw;
      steps *= 2;
    }
  }
  for (; k < ctl.max_halvings; ++k) {
    steps *= 2;
    OdeSolution<N> fine = detail::rk4_pass<N>(rhs, y0, t0, duration, steps, ctl.samples);
    bool converged = true;
    for (std::size_t i = 0; i < N; ++i) {
      const double scale = std::max(std::abs(fine.final[i]), ctl.abs_floor);
      if (std::abs(fine.final[i] - coarse.final[i]) > ctl.rel_tol * scale) converged = false;
    }
    if (converged) return fine;
    coarse = std::move(fine);
  }
  std::ostringstream os;
  os << "RK4 step halving did not reach rel_tol " << ctl.rel_tol << " after " << steps
     << " steps over duration " << duration;
  throw NumericalError(os.str());
}

}  // namespace hybridmeas
