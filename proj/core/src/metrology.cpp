#include "hybridmeas/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hybridmeas/errors.hpp"
#include "hybridmeas/fock.hpp"
#include "hybridmeas/parallel.hpp"

namespace hybridmeas {

namespace {

double weighted_sum(const std::vector<double>& w, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i];
  return s;
}

std::vector<double> trapezoid_weights(const std::vector<double>& nodes) {
  std::vector<double> w(nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double h = nodes[i + 1] - nodes[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

// CFI integrand per outcome node as 4 (d sqrt(p) / d theta)^2, averaging the
// squared one-sided differences; finite where p0 vanishes. Zero where all
// three samples are below the floor.
std::vector<double> cfi_density(const std::vector<double>& p0, const std::vector<double>& plus,
                                const std::vector<double>& minus, double dtheta, double floor) {
  std::vector<double> out(p0.size(), 0.0);
  for (std::size_t i = 0; i < p0.size(); ++i) {
    if (std::max({p0[i], plus[i], minus[i]}) < floor) continue;
    const double r0 = std::sqrt(std::max(p0[i], 0.0));
    const double up = std::sqrt(std::max(plus[i], 0.0)) - r0;
    const double dn = r0 - std::sqrt(std::max(minus[i], 0.0));
    out[i] = 2.0 * (up * up + dn * dn) / (dtheta * dtheta);
  }
  return out;
}

void check_drift(double n_plus, double n_minus, double tol) {
  if (std::abs(n_plus - n_minus) > tol) {
    std::ostringstream os;
    os << "normalization drifts by " << std::abs(n_plus - n_minus)
       << " between theta samples (tolerance " << tol << ")";
    throw NumericalError(os.str());
  }
}

// Share of the CFI carried by |phi| > phi_max / 2.
double tail_share(const PhiGrid& g, const std::vector<double>& dens, double total) {
  if (!(total > 0.0)) return 0.0;
  const double edge = 0.5 * std::max(std::abs(g.nodes.front()), std::abs(g.nodes.back()));
  double t = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (std::abs(g.nodes[i]) > edge) t += g.weights[i] * dens[i];
  }
  return t / total;
}

}  // namespace

bool phi_resolved(const GridSpec& spec, double x_support, double p_support, double phi) {
  // Ai(s (phi p^2 - x)), s = (4/|phi|)^{1/3}, oscillates only where
  // phi p^2 < x. There the phase (2/3)|z|^{3/2} changes at most at
  // 2 sqrt(x/|phi|) per unit X, and per unit P at
  // 2 s |phi| p sqrt(s (x - |phi| p^2)), largest (= 2 x) at p^2 = x/(2|phi|).
  // Require six samples per local wavelength within the support.
  const double mag = std::abs(phi);
  if (!(mag > 0.0)) return false;
  const double limit = std::numbers::pi / 3.0;
  const double kx = 2.0 * std::sqrt(x_support / mag);
  double kp = 2.0 * x_support;
  if (p_support * p_support < x_support / (2.0 * mag)) {
    const double s = std::cbrt(4.0 / mag);
    kp = 2.0 * s * mag * p_support * std::sqrt(s * (x_support - mag * p_support * p_support));
  }
  return kx * spec.x.step() <= limit && kp * spec.p.step() <= limit;
}

double cfi_from_family(const PdfFamily& family, const std::vector<double>& measure,
                       const FamilyOptions& opts) {
  if (!(opts.dtheta > 0.0)) throw ValidationError({"dtheta must be > 0"});
  const std::vector<double> p0 = family(0.0);
  const std::vector<double> plus = family(opts.dtheta);
  const std::vector<double> minus = family(-opts.dtheta);
  if (p0.size() != measure.size() || plus.size() != measure.size() ||
      minus.size() != measure.size()) {
    throw ValidationError({"pdf family and measure sizes differ"});
  }
  check_drift(weighted_sum(measure, plus), weighted_sum(measure, minus), opts.drift_tol);
  return weighted_sum(measure, cfi_density(p0, plus, minus, opts.dtheta, opts.floor));
}

double cfi_homodyne(const WignerGrid& w, const FamilyOptions& opts) {
  const GridAxis& ax = w.spec().x;
  std::vector<double> measure(ax.n, ax.step());
  measure.front() *= 0.5;
  measure.back() *= 0.5;
  return cfi_from_family([&](double theta) { return marginal_x(displace_x(w, theta)); }, measure,
                         opts);
}

PhiGrid make_phi_grid(double phi_min, double phi_max, int per_sign, int inner) {
  if (!(phi_min > 0.0 && phi_max > phi_min) || per_sign < 2 || inner < 0) {
    throw ValidationError({"phi grid needs 0 < phi_min < phi_max, per_sign >= 2, inner >= 0"});
  }
  std::vector<double> mags;
  for (int k = 0; k < inner; ++k) mags.push_back(phi_min * k / inner);
  const double ratio = std::log(phi_max / phi_min) / (per_sign - 1);
  for (int k = 0; k < per_sign; ++k) mags.push_back(phi_min * std::exp(ratio * k));
  PhiGrid g;
  for (auto it = mags.rbegin(); it != mags.rend(); ++it) {
    if (*it > 0.0) g.nodes.push_back(-*it);
  }
  for (double m : mags) g.nodes.push_back(m);
  g.weights = trapezoid_weights(g.nodes);
  return g;
}

PhiCfi cfi_phi(const WignerGrid& w, const PhiGrid& phis, const FamilyOptions& opts, int jobs,
               std::optional<double> scale_override) {
  double scale = 0.0;
  if (scale_override) {
    if (!(*scale_override > 0.0)) throw ValidationError({"scale must be > 0"});
    scale = *scale_override;
  } else {
    const double mx2 = moment(w.raw(), 2, 0);
    const double mp2 = moment(w.raw(), 0, 2);
    if (!(mx2 > 0.0 && mp2 > 0.0)) throw NumericalError("grid second moments are not positive");
    scale = std::sqrt(w.hbar()) * std::pow(mx2 / mp2, 0.25);
  }

  const WignerGrid s0 = to_canonical(w, scale);
  const WignerGrid sp = to_canonical(displace_x(w, opts.dtheta), scale);
  const WignerGrid sm = to_canonical(displace_x(w, -opts.dtheta), scale);

  const GridSpec& cs = s0.spec();
  const double xs = std::min(7.0 * std::sqrt(moment(s0.raw(), 2, 0)),
                             std::max(std::abs(cs.x.min), std::abs(cs.x.max)));
  const double ps = std::min(7.0 * std::sqrt(moment(s0.raw(), 0, 2)),
                             std::max(std::abs(cs.p.min), std::abs(cs.p.max)));
  for (double phi : phis.nodes) {
    if (!phi_resolved(cs, xs, ps, phi)) {
      std::ostringstream os;
      os << "phi = " << phi << " is not resolved by the grid over the state's support";
      throw GridError(os.str());
    }
  }

  const std::size_t n = phis.nodes.size();
  std::vector<double> p0(n), pp(n), pm(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const PhaseSpaceGrid wp = phi_wigner(PhiState{phis.nodes[i]}, s0.spec());
    p0[i] = overlap(wp, s0.raw());
    pp[i] = overlap(wp, sp.raw());
    pm[i] = overlap(wp, sm.raw());
  });
  check_drift(weighted_sum(phis.weights, pp), weighted_sum(phis.weights, pm), opts.drift_tol);
  const std::vector<double> dens = cfi_density(p0, pp, pm, opts.dtheta, opts.floor);
  PhiCfi out;
  out.cfi = weighted_sum(phis.weights, dens);
  out.norm = weighted_sum(phis.weights, p0);
  out.tail = tail_share(phis, dens, out.cfi);
  out.phi_max = phis.nodes.back();
  out.points = static_cast<int>(n);
  return out;
}

namespace {

// p(phi; theta) = (1/pi) Re ∫_0^∞ e^{-vx k^2/2 + i(phi k^3/12 - theta k)}
//                 (1 - 2 i vp phi k)^{-1/2} Q(k) dk,  alpha = 1/(2 vp) - i phi k,
// with Q = 1/(2 alpha) - k^2/4 for the Gaussian and
// Q = [3/(4 alpha^2) - k^2/(4 alpha) + k^4/16] / vp after P rho P.
double phi_density(double vx, double vp, double phi, double theta, bool subtracted) {
  using cd = std::complex<double>;
  const cd i{0.0, 1.0};
  // The k integral runs along the ray k = r e^{±i pi/6} (sign of phi). The
  // integrand is analytic in the sector swept from the real axis, and on the
  // ray the cubic phase turns into decay e^{-|phi| r^3 / 12}.
  const cd dir = std::polar(1.0, (phi >= 0.0 ? 1.0 : -1.0) * std::numbers::pi / 6.0);
  auto f = [&](double r) {
    const cd k = r * dir;
    const cd alpha = 1.0 / (2.0 * vp) - i * phi * k;
    const cd poly = subtracted
                        ? (3.0 / (4.0 * alpha * alpha) - k * k / (4.0 * alpha) + k * k * k * k / 16.0) / vp
                        : 1.0 / (2.0 * alpha) - k * k / 4.0;
    const cd expo = -vx * k * k / 2.0 + i * (phi * k * k * k / 12.0 - theta * k);
    const cd root = std::sqrt(1.0 - 2.0 * i * vp * phi * k);
    return (std::exp(expo) * poly / root * dir).real();
  };
  // Decay of the Gaussian (cos(pi/3) = 1/2) or the cubic term, whichever is faster.
  constexpr double kLog = 50.0;
  double rmax = std::sqrt(4.0 * kLog / vx);
  if (phi != 0.0) rmax = std::min(rmax, std::cbrt(12.0 * kLog / std::abs(phi)));
  // Depth is capped: at large |phi| the result is tiny against the integrand
  // scale and the relative target is unreachable in double precision.
  double err = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, rmax, 10, 1e-12, &err);
  return integral / std::numbers::pi;
}

}  // namespace

double phi_density_gaussian(double vx, double vp, double phi, double theta) {
  return phi_density(vx, vp, phi, theta, false);
}

double phi_density_subtracted(double vx, double vp, double phi, double theta) {
  return phi_density(vx, vp, phi, theta, true);
}

PhiCfi cfi_phi_subtracted(const GaussianMoments& m, double hbar, const PhiOptions& opts) {
  m.validate();
  if (!(hbar > 0.0 && hbar <= 1.0)) throw ValidationError({"hbar must lie in (0, 1]"});
  const double scale = balanced_scale(m, hbar);
  const double vx = m.var_x / (scale * scale);
  const double vp = m.var_p * scale * scale / (hbar * hbar);
  const double dtheta = opts.family.dtheta / scale;
  const double decades = std::log10(opts.phi_max / opts.phi_min);
  const double per_decade = opts.per_sign / decades;

  double phi_max = opts.phi_max;
  for (;;) {
    const int per_sign =
        std::max(2, static_cast<int>(std::lround(per_decade * std::log10(phi_max / opts.phi_min))));
    const PhiGrid g = make_phi_grid(opts.phi_min, phi_max, per_sign);
    const std::size_t n = g.nodes.size();
    std::vector<double> p0(n), pp(n), pm(n);
    parallel_for(n, opts.jobs, [&](std::size_t k) {
      p0[k] = phi_density_subtracted(vx, vp, g.nodes[k], 0.0);
      pp[k] = phi_density_subtracted(vx, vp, g.nodes[k], dtheta);
      pm[k] = phi_density_subtracted(vx, vp, g.nodes[k], -dtheta);
    });
    check_drift(weighted_sum(g.weights, pp), weighted_sum(g.weights, pm), opts.family.drift_tol);
    const std::vector<double> dens = cfi_density(p0, pp, pm, dtheta, opts.family.floor);
    const double cfi_canonical = weighted_sum(g.weights, dens);
    PhiCfi out;
    out.cfi = cfi_canonical / (scale * scale);
    out.norm = weighted_sum(g.weights, p0);
    out.tail = tail_share(g, dens, cfi_canonical);
    out.phi_max = phi_max;
    out.points = static_cast<int>(n);
    if (out.tail <= opts.tail_tol) return out;
    if (phi_max * 2.0 > opts.phi_limit) {
      std::ostringstream os;
      os << "phi-basis CFI tail did not converge: share " << out.tail << " beyond |phi| = "
         << phi_max / 2.0 << " (limit " << opts.phi_limit << ")";
      throw NumericalError(os.str());
    }
    phi_max *= 2.0;
  }
}

QfiReport qfi(const WignerGrid& w) {
  const FockDensityMatrix rho = reconstruct_auto(w);
  const QfiResult r = qfi_displacement_detailed(rho);
  return {r.value, rho.dim, rho.trace_deficit, r.clamped};
}

double gaussian_qfi(const GaussianMoments& m) {
  m.validate();
  return 1.0 / m.var_x;
}

std::string_view to_string(PostSelection mode) noexcept {
  return mode == PostSelection::Immediate ? "immediate" : "threshold";
}

void ScenarioSpec::validate() const {
  params.validate();
  std::vector<std::string> bad;
  if (t1_grid.empty()) bad.emplace_back("t1 grid is empty");
  for (std::size_t i = 0; i < t1_grid.size(); ++i) {
    if (!(std::isfinite(t1_grid[i]) && t1_grid[i] >= 0.0)) {
      bad.emplace_back("t1 grid values must be finite and >= 0");
      break;
    }
    if (i > 0 && !(t1_grid[i] > t1_grid[i - 1])) {
      bad.emplace_back("t1 grid must be strictly increasing");
      break;
    }
  }
  if (!gaussian_only && !non_gaussian) bad.emplace_back("comparison set is empty");
  if (jobs < 1) bad.emplace_back("jobs must be >= 1");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

bool FisherReport::cfi_within_qfi(double rel_slack) const {
  if (!qfi) return true;
  const double bound = *qfi * (1.0 + rel_slack);
  if (cfi_homodyne && *cfi_homodyne > bound) return false;
  if (cfi_phi && *cfi_phi > bound) return false;
  return true;
}

WignerGrid post_click_wigner(const PreClickState& s, const GridOptions& grid) {
  const GridSpec spec = default_grid(s.pre_click, s.bopp_damping, grid);
  const WignerGrid pre = gaussian_wigner(s.pre_click, spec, s.bopp_damping);
  return photon_subtract(pre, s.pre_click, {s.bopp_damping, s.pre_click.var_p});
}

WignerGrid gaussian_only_wigner(const ProtocolParams& p, const GridOptions& grid) {
  const GaussianMoments rotated = rotate_half_pi(evolve_phase1(p, p.t1).moments);
  return gaussian_wigner(rotated, default_grid(rotated, std::nullopt, grid),
                         frame_hbar(p.gamma, p.t1));
}

namespace {

// Fills t2 and reachability for one point; false if the point is skipped.
bool resolve_t2(const ScenarioSpec& spec, FisherReport& r) {
  if (spec.mode == PostSelection::Immediate) return true;
  const ThresholdResult th = t2_for_threshold(r.t1, spec.params, spec.threshold);
  if (!th.reachable) {
    r.reachable = false;
    std::ostringstream os;
    os << "threshold_unreachable(p_at_horizon=" << th.probability_at_horizon << ")";
    r.flags.push_back(os.str());
    return false;
  }
  r.t2 = th.t2;
  return true;
}

}  // namespace

std::vector<FisherReport> scenario_fig4(const ScenarioSpec& spec) {
  spec.validate();
  std::vector<FisherReport> out(spec.t1_grid.size());
  parallel_for(out.size(), spec.jobs, [&](std::size_t i) {
    FisherReport& r = out[i];
    r.t1 = spec.t1_grid[i];
    r.mode = spec.mode;
    ProtocolParams p = spec.params;
    p.t1 = r.t1;
    if (spec.gaussian_only) r.cfi_gaussian = cfi_homodyne(gaussian_only_wigner(p, spec.grid));
    if (!spec.non_gaussian || !resolve_t2(spec, r)) return;
    p.t2 = r.t2;
    const WignerGrid w = post_click_wigner(evolve_protocol(p), spec.grid);
    r.cfi_homodyne = cfi_homodyne(w);
    if (spec.with_qfi) {
      const QfiReport q = qfi(w);
      r.qfi = q.qfi;
      r.fock_dim = q.dim;
      if (!r.cfi_within_qfi()) r.flags.push_back("cfi_exceeds_qfi");
    }
  });
  return out;
}

std::vector<FisherReport> scenario_fig5(const ScenarioSpec& spec) {
  spec.validate();
  std::vector<FisherReport> out(spec.t1_grid.size());
  PhiOptions phi = spec.phi;
  phi.jobs = 1;
  parallel_for(out.size(), spec.jobs, [&](std::size_t i) {
    FisherReport& r = out[i];
    r.t1 = spec.t1_grid[i];
    r.mode = spec.mode;
    ProtocolParams p = spec.params;
    p.t1 = r.t1;
    if (spec.gaussian_only) r.cfi_gaussian = cfi_homodyne(gaussian_only_wigner(p, spec.grid));
    if (!spec.non_gaussian || !resolve_t2(spec, r)) return;
    p.t2 = r.t2;
    const PreClickState s = evolve_protocol(p);
    const WignerGrid w = post_click_wigner(s, spec.grid);
    r.cfi_homodyne = cfi_homodyne(w);
    const PhiCfi ph = cfi_phi_subtracted(s.pre_click, s.bopp_damping, phi);
    r.cfi_phi = ph.cfi;
    r.phi_norm = ph.norm;
    r.phi_tail = ph.tail;
    const QfiReport q = qfi(w);
    r.qfi = q.qfi;
    r.fock_dim = q.dim;
    if (q.clamped > 0) r.flags.push_back("eigenvalues_clamped=" + std::to_string(q.clamped));
    if (!r.cfi_within_qfi()) r.flags.push_back("cfi_exceeds_qfi");
  });
  return out;
}

std::vector<double> default_fig4_t1_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 40; ++k) g.push_back(0.005 * k);
  for (int k = 5; k <= 20; ++k) g.push_back(0.05 * k);
  return g;
}

std::vector<double> default_fig5_t1_grid() {
  return {0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0};
}

}  // namespace hybridmeas
