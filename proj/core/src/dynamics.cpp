#include "hybridmeas/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybridmeas/errors.hpp"
#include "hybridmeas/parallel.hpp"

namespace hybridmeas {

namespace {

double big_n(const ProtocolParams& p) { return static_cast<double>(p.n_atoms); }

OdeState<2> pack(const GaussianMoments& m) { return {m.var_x, m.var_p}; }
GaussianMoments unpack(const OdeState<2>& y) { return {y[0], y[1]}; }

// Phase-II moments plus accumulated hazard, integrated together so the
// click probability shares the moment step control.
OdeState<3> phase2_with_hazard(const OdeState<3>& y, const ProtocolParams& p, double t) {
  const GaussianMoments m{y[0], y[1]};
  const MomentRates r = phase2_rhs(m, p, t);
  return {r.dvar_x, r.dvar_p, detection_rate(m, p)};
}

}  // namespace

double pumping_rate(double second_moment, double gamma) {
  return -2.0 * gamma * second_moment + gamma;
}

MomentRates phase1_rhs(const GaussianMoments& m, const ProtocolParams& p, double t) {
  const double n = big_n(p);
  return {p.kappa * n / 8.0 * std::exp(-4.0 * p.gamma * t) + pumping_rate(m.var_x, p.gamma),
          -p.kappa * p.eta * n / 2.0 * m.var_p * m.var_p + pumping_rate(m.var_p, p.gamma)};
}

MomentRates phase2_rhs(const GaussianMoments& m, const ProtocolParams& p, double t) {
  const double n = big_n(p);
  return {p.kappa * (1.0 - p.eta / 2.0) * n / 8.0 * std::exp(-4.0 * p.gamma * (t + p.t1)) +
              pumping_rate(m.var_x, p.gamma),
          -p.kappa * p.eta * n / 4.0 * m.var_p * m.var_p + pumping_rate(m.var_p, p.gamma)};
}

EvolutionResult integrate(const MomentRhs& rhs, const GaussianMoments& m0, double duration,
                          const StepControl& ctl, double t0) {
  m0.validate();
  auto f = [&](const OdeState<2>& y, double t) {
    const MomentRates r = rhs(unpack(y), t);
    return OdeState<2>{r.dvar_x, r.dvar_p};
  };
  const OdeSolution<2> sol = integrate_rk4<2>(f, pack(m0), duration, ctl, t0);
  EvolutionResult out;
  out.moments = unpack(sol.final);
  out.elapsed = duration;
  out.trajectory.reserve(sol.times.size());
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    out.trajectory.push_back({sol.times[i], sol.states[i][0], sol.states[i][1]});
  }
  return out;
}

EvolutionResult evolve_phase1(const ProtocolParams& p, double duration, const StepControl& ctl) {
  p.validate();
  return integrate([&](const GaussianMoments& m, double t) { return phase1_rhs(m, p, t); },
                   initial_scs(), duration, ctl);
}

EvolutionResult evolve_phase2(const GaussianMoments& rotated, const ProtocolParams& p,
                              double duration, const StepControl& ctl) {
  p.validate();
  return integrate([&](const GaussianMoments& m, double t) { return phase2_rhs(m, p, t); },
                   rotated, duration, ctl);
}

double frame_hbar(double gamma, double elapsed) { return std::exp(-2.0 * gamma * elapsed); }

PreClickState evolve_protocol(const ProtocolParams& p, const StepControl& ctl) {
  p.validate();
  PreClickState s;
  s.after_phase1 = evolve_phase1(p, p.t1, ctl).moments;
  s.rotated = rotate_half_pi(s.after_phase1);
  s.pre_click = evolve_phase2(s.rotated, p, p.t2, ctl).moments;
  s.stage = ProtocolStage{}
                .advance(StageTag::PhaseI, 0.0)
                .advance(StageTag::Rotated, p.t1)
                .advance(StageTag::PhaseII, 0.0);
  s.bopp_damping = frame_hbar(p.gamma, p.t1 + p.t2);
  return s;
}

double squeezing_zeta(const ProtocolParams& p) {
  return std::sqrt(2.0 * p.gamma * p.gamma + p.kappa * p.eta * big_n(p) * p.gamma);
}

GaussianMoments closed_form_final(const ProtocolParams& p) {
  p.validate();
  if (!(p.gamma > 0.0)) throw DomainError("closed-form moments need gamma > 0");
  const double g = p.gamma;
  const double kn = p.kappa * big_n(p);
  const double eta = p.eta;
  const double t1 = p.t1;
  const double t2 = p.t2;
  const double zeta = squeezing_zeta(p);

  // X after phase II: driven decay from the squeezed phase-I P variance.
  double squeeze_term = 0.0;
  if (t1 > 0.0) {
    const double coth = 1.0 / std::tanh(zeta * t1 / std::sqrt(2.0));
    squeeze_term = (std::sqrt(2.0) / 2.0) * (2.0 * g * g - zeta * zeta) * std::exp(-2.0 * g * t2) /
                   (std::sqrt(2.0) * (2.0 * g * g + zeta * zeta) + 4.0 * g * zeta * coth);
  }
  const double var_x = (eta - 2.0) * kn / (32.0 * g) *
                           (std::exp(-4.0 * g * (t1 + t2)) - std::exp(-4.0 * g * t1 - 2.0 * g * t2)) +
                       0.5 + squeeze_term;

  // P after phase II: Riccati solution started from the antisqueezed X
  // variance, written as (A E + B) / (C E + D) with E = e^{s t2} and divided
  // through by E. Every e^{4 gamma t1} factor is pulled out of A..D.
  const double s = std::sqrt(g) * std::sqrt(4.0 * g + eta * kn);
  const double e2 = std::exp(-2.0 * g * t1);
  const double e4 = std::exp(-4.0 * g * t1);
  const double q_scaled = kn * e4 - kn * e2 + 8.0 * g;
  const double r = kn * (e2 - e4) / g + 8.0;
  const double a_coef = 32.0 * g * (-q_scaled / 8.0 - s * r / 16.0);
  const double b_coef = 32.0 * g * (q_scaled / 8.0 - s * r / 16.0);
  const double c_coef = eta * kn * kn * (e4 - e2) - 8.0 * g * (8.0 * g + 4.0 * s + eta * kn);
  const double d_coef = eta * kn * kn * (e2 - e4) + 8.0 * g * (8.0 * g - 4.0 * s + eta * kn);
  const double inv_e = std::exp(-s * t2);
  const double var_p = (a_coef + b_coef * inv_e) / (c_coef + d_coef * inv_e);
  return {var_x, var_p};
}

double detection_rate(const GaussianMoments& m, const ProtocolParams& p) {
  return p.eta * p.kappa * big_n(p) * m.var_p / 8.0;
}

double detection_probability(double t1, double t2, const ProtocolParams& p,
                             const StepControl& ctl) {
  ProtocolParams q = p;
  q.t1 = t1;
  q.t2 = t2;
  q.validate();
  const GaussianMoments rotated = rotate_half_pi(evolve_phase1(q, t1, ctl).moments);
  auto f = [&](const OdeState<3>& y, double t) { return phase2_with_hazard(y, q, t); };
  const OdeSolution<3> sol =
      integrate_rk4<3>(f, OdeState<3>{rotated.var_x, rotated.var_p, 0.0}, t2, ctl);
  return -std::expm1(-sol.final[2]);
}

ThresholdResult t2_for_threshold(double t1, const ProtocolParams& p,
                                 const ThresholdOptions& opts) {
  ProtocolParams q = p;
  q.t1 = t1;
  q.t2 = 0.0;
  q.validate();
  if (!(opts.horizon > 0.0) || !(opts.rel_tol > 0.0)) {
    throw ValidationError({"threshold search needs horizon > 0 and rel_tol > 0"});
  }
  ThresholdResult out;
  if (q.p_threshold == 0.0) {
    out.reachable = true;
    return out;
  }
  const double target = q.p_threshold;
  const double at_horizon = detection_probability(t1, opts.horizon, q);
  if (at_horizon < target) {
    out.probability_at_horizon = at_horizon;
    return out;
  }
  double lo = 0.0;
  double hi = std::min(1e-3, opts.horizon);
  while (detection_probability(t1, hi, q) < target) {
    lo = hi;
    hi = std::min(2.0 * hi, opts.horizon);
  }
  while (hi - lo > opts.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (detection_probability(t1, mid, q) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.reachable = true;
  out.t2 = 0.5 * (lo + hi);
  return out;
}

std::vector<TimeBudget> total_time_curve(std::span<const double> t1_grid, const ProtocolParams& p,
                                         const ThresholdOptions& opts, int jobs) {
  std::vector<TimeBudget> out(t1_grid.size());
  parallel_for(t1_grid.size(), jobs, [&](std::size_t i) {
    const double t1 = t1_grid[i];
    const ThresholdResult r = t2_for_threshold(t1, p, opts);
    out[i] = {t1, r.t2, t1 + r.t2, r.reachable};
  });
  return out;
}

std::vector<double> default_fig3_t1_grid() {
  std::vector<double> g;
  for (int k = 0; k < 200; ++k) g.push_back(1e-4 * k);
  for (int k = 20; k < 100; ++k) g.push_back(1e-3 * k);
  for (int k = 10; k <= 200; ++k) g.push_back(1e-2 * k);
  return g;
}

}  // namespace hybridmeas
