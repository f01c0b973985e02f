// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: hybridmeas_acceptance [criterion ...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hybridmeas/dynamics.hpp"
#include "hybridmeas/fock.hpp"
#include "hybridmeas/metrology.hpp"
#include "hybridmeas/wigner.hpp"
#include "oracles.hpp"

using namespace hybridmeas;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<void(Verdict&)> run;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

ProtocolParams base(double kappa, double gamma, int n = 500) {
  ProtocolParams p;
  p.kappa = kappa;
  p.gamma = gamma;
  p.n_atoms = n;
  p.eta = 1.0;
  return p;
}

void minimum_uncertainty(Verdict& v) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> kappa(0.1, 2.0), t(0.0, 0.2);
  std::uniform_int_distribution<int> n(10, 1000);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    ProtocolParams p = base(kappa(rng), 0.0, n(rng));
    p.t1 = t(rng);
    p.t2 = t(rng);
    StepControl ctl;
    ctl.samples = 8;
    const auto s = evolve_protocol(p);
    for (const auto& m : {s.after_phase1, s.rotated, s.pre_click}) {
      worst = std::max(worst, std::abs(m.product() - 0.25));
    }
    for (const auto& tr : {evolve_phase1(p, p.t1, ctl), evolve_phase2(s.rotated, p, p.t2, ctl)}) {
      for (const auto& x : tr.trajectory) {
        worst = std::max(worst, std::abs(x.var_x * x.var_p - 0.25));
      }
    }
  }
  v.detail << "max |VxVp - 1/4| = " << worst << " ";
  v.require(worst <= 1e-8, "1e-8");
}

void closed_form(Verdict& v) {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> kappa(0.05, 3.0), gamma(0.1, 2.0), t(0.0, 1.0),
      eta(0.2, 1.0);
  std::uniform_int_distribution<int> n(50, 2000);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    ProtocolParams p = base(kappa(rng), gamma(rng), n(rng));
    p.eta = eta(rng);
    p.t1 = t(rng);
    p.t2 = t(rng);
    const GaussianMoments exact = closed_form_final(p);
    const GaussianMoments num = evolve_protocol(p).pre_click;
    worst = std::max({worst, rel(num.var_x, exact.var_x), rel(num.var_p, exact.var_p)});
  }
  v.detail << "max relative difference = " << worst << " over 20 points ";
  v.require(worst <= 1e-5, "1e-5");
}

void fock_anchors(Verdict& v) {
  const auto s = evolve_protocol(base(1.0, 0.0));
  const WignerGrid w = post_click_wigner(s);
  const FockDensityMatrix rho = reconstruct_auto(w);
  double dev = 0.0;
  for (int n = 0; n < rho.dim; ++n) {
    for (int m = 0; m < rho.dim; ++m) {
      dev = std::max(dev, std::abs(rho(n, m) - ((n == 1 && m == 1) ? 1.0 : 0.0)));
    }
  }
  const double q1 = qfi_displacement(rho);
  const double h1 = cfi_homodyne(w);
  const GaussianMoments vac{0.5, 0.5};
  const WignerGrid w0 = gaussian_wigner(vac, default_grid(vac));
  const double q0 = qfi_displacement(reconstruct_auto(w0));
  const double h0 = cfi_homodyne(w0);
  v.detail << "|rho - |1><1||max = " << dev << ", QFI = " << q1 << ", CFI = " << h1
           << ", vacuum QFI = " << q0 << ", vacuum CFI = " << h0 << " ";
  v.require(dev <= 1e-5, "elementwise 1e-5");
  v.require(std::abs(q1 - 6.0) <= 1e-3, "QFI 6 +- 1e-3");
  v.require(rel(h1, 6.0) <= 5e-3, "CFI 6 +- 0.5%");
  v.require(std::abs(q0 - 2.0) <= 1e-3, "vacuum QFI 2");
  v.require(rel(h0, 2.0) <= 5e-3, "vacuum CFI 2");
}

void gaussian_consistency(Verdict& v) {
  double worst_h = 0.0, worst_q = 0.0;
  for (int k = 0; k <= 20; ++k) {
    ProtocolParams p = base(1.0, 1.0);
    p.t1 = 0.1 * k;
    const GaussianMoments rot = rotate_half_pi(evolve_phase1(p, p.t1).moments);
    const WignerGrid w = gaussian_only_wigner(p);
    worst_h = std::max(worst_h, rel(cfi_homodyne(w), 1.0 / rot.var_x));
    const double oracle_q =
        oracle::gaussian_qfi_series(rot.var_x, rot.var_p, frame_hbar(p.gamma, p.t1));
    worst_q = std::max(worst_q, rel(qfi(w).qfi, oracle_q));
  }
  v.detail << "gamma t1 in [0, 2] step 0.1: homodyne vs 1/Vx " << worst_h
           << ", Fock QFI vs series oracle " << worst_q << " ";
  v.require(worst_h <= 5e-3, "homodyne 0.5%");
  v.require(worst_q <= 5e-3, "QFI 0.5%");
}

void fig3(Verdict& v) {
  const std::vector<double> grid = default_fig3_t1_grid();
  ProtocolParams p = base(1.0, 1.0);
  p.p_threshold = 0.0;
  const auto flat = total_time_curve(grid, p);
  bool monotone = true;
  for (std::size_t i = 1; i < flat.size(); ++i) {
    if (!(flat[i].total > flat[i - 1].total) || flat[i].total != flat[i].t1) monotone = false;
  }
  p.p_threshold = 0.2;
  const auto curve = total_time_curve(grid, p);
  int minima = 0;
  std::size_t at = 0;
  bool reachable = true;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    reachable = reachable && curve[i].reachable;
    if (i > 0 && i + 1 < curve.size() && curve[i].total < curve[i - 1].total &&
        curve[i].total <= curve[i + 1].total) {
      ++minima;
      at = i;
    }
  }
  v.detail << "threshold 0 monotone: " << (monotone ? "yes" : "no") << "; threshold 0.2: "
           << minima << " interior minimum at gamma t1 = " << curve[at].t1
           << " (T = " << curve[at].total << " vs T(0) = " << curve.front().total << ") ";
  v.require(monotone, "threshold 0 monotone");
  v.require(reachable, "threshold 0.2 reachable everywhere");
  v.require(minima == 1, "one interior minimum");
}

std::vector<FisherReport> run_fig4(bool threshold, double kappa, bool with_qfi) {
  ScenarioSpec s;
  s.params = base(kappa, 1.0);
  s.params.p_threshold = 0.2;
  s.mode = threshold ? PostSelection::Threshold : PostSelection::Immediate;
  s.t1_grid = default_fig4_t1_grid();
  s.with_qfi = with_qfi;
  return scenario_fig4(s);
}

void fig4(Verdict& v) {
  int gain_a = 0;
  double lo = -1.0, hi = -1.0;
  for (const auto& r : run_fig4(false, 1.0, false)) {
    if (*r.cfi_homodyne > *r.cfi_gaussian) {
      ++gain_a;
      if (lo < 0.0) lo = r.t1;
      hi = r.t1;
    }
  }
  int gain_b = 0, unreachable = 0;
  for (const auto& r : run_fig4(true, 0.1, false)) {
    if (!r.reachable) {
      ++unreachable;
      continue;
    }
    if (*r.cfi_homodyne > *r.cfi_gaussian) ++gain_b;
  }
  v.detail << "mode a: NG > G at " << gain_a << " points, gamma t1 in [" << lo << ", " << hi
           << "]; mode b: NG > G at " << gain_b << " points (" << unreachable
           << " unreachable) ";
  v.require(gain_a > 0, "mode a gain interval");
  v.require(gain_b == 0, "mode b no gain");
  v.require(unreachable == 0, "mode b reachable");
}

std::vector<FisherReport> run_fig5() {
  ScenarioSpec s;
  s.params = base(1.0, 1.0);
  s.t1_grid = default_fig5_t1_grid();
  s.gaussian_only = false;
  return scenario_fig5(s);
}

void fig5(Verdict& v) {
  const auto rows = run_fig5();
  // Early times: gamma t1 <= 0.05.
  bool ordered = true;
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < rows.size() && rows[i].t1 <= 0.05; ++i) {
    const auto& r = rows[i];
    ordered = ordered && *r.cfi_homodyne < *r.cfi_phi && *r.cfi_phi <= *r.qfi * (1.0 + 1e-3);
    if (i < 2) worst_gap = std::max(worst_gap, rel(*r.cfi_phi, *r.qfi));
  }
  v.detail << "hom < phi <= qfi for gamma t1 <= 0.05: " << (ordered ? "yes" : "no")
           << "; phi vs qfi at the first two points " << worst_gap << " ";
  v.require(ordered, "early ordering");
  v.require(worst_gap <= 0.05, "phi within 5% of qfi");
}

void phi_basis(Verdict& v) {
  double worst = 0.0;
  for (double phi : {0.125, 0.0625}) {
    for (double x = -3.0; x <= 3.0 + 1e-9; x += 0.75) {
      for (double p = -2.5; p <= 2.5 + 1e-9; p += 0.625) {
        worst = std::max(worst, std::abs(phi_wigner_value({phi}, x, p) -
                                         oracle::phi_wigner_bruteforce(phi, x, p, 30.0, 40000)));
      }
    }
  }
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> z(-12.0, 8.0);
  double worst_ai = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double zi = z(rng);
    worst_ai = std::max(worst_ai, std::abs(airy_ai(zi) - oracle::airy_contour(zi)));
  }
  v.detail << "W_phi vs brute force " << worst << ", Ai vs contour quadrature " << worst_ai << " ";
  v.require(worst <= 1e-4, "W_phi 1e-4");
  v.require(worst_ai <= 1e-9, "Ai 1e-9");
}

void cfi_bound(Verdict& v) {
  int points = 0, violations = 0;
  auto tally = [&](const std::vector<FisherReport>& rows) {
    for (const auto& r : rows) {
      if (!r.qfi) continue;
      ++points;
      if (!r.cfi_within_qfi(1e-3)) ++violations;
    }
  };
  tally(run_fig5());
  tally(run_fig4(false, 1.0, true));
  tally(run_fig4(false, 0.1, true));
  tally(run_fig4(true, 1.0, true));
  tally(run_fig4(true, 0.1, true));
  v.detail << points << " points, " << violations << " with CFI > QFI (1 + 1e-3) ";
  v.require(violations == 0, "CFI <= QFI");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"minimum_uncertainty", 1.0, minimum_uncertainty},
      {"closed_form_oracle", 10.0, closed_form},
      {"fock_anchors", 30.0, fock_anchors},
      {"gaussian_consistency", 60.0, gaussian_consistency},
      {"fig3_total_time", 60.0, fig3},
      {"fig4_cfi_comparison", 300.0, fig4},
      {"fig5_measurement_bases", 600.0, fig5},
      {"phi_basis_validity", 60.0, phi_basis},
      {"cfi_below_qfi", 600.0, cfi_bound},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) {
      continue;
    }
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "[exception: " << e.what() << "] ";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) v.require(false, "runtime budget");
    std::printf("%s %-24s %s(%.2f s, budget %.0f s)\n", v.pass ? "PASS" : "FAIL", c.name.c_str(),
                v.detail.str().c_str(), secs, c.budget_s);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
