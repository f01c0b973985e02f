#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>

#include "hybridmeas/dynamics.hpp"
#include "hybridmeas/fock.hpp"
#include "hybridmeas/metrology.hpp"

namespace hybridmeas::cli {

namespace {

ProtocolParams params(double kappa, double gamma, double t1 = 0.0, double t2 = 0.0) {
  ProtocolParams p;
  p.kappa = kappa;
  p.gamma = gamma;
  p.t1 = t1;
  p.t2 = t2;
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

WignerGrid vacuum_grid() {
  const GaussianMoments vac = initial_scs();
  return gaussian_wigner(vac, default_grid(vac));
}

WignerGrid one_photon_grid() {
  return post_click_wigner(evolve_protocol(params(1.0, 0.0)));
}

// value = deviation, passes when value <= tol.
CheckResult check(const std::string& name, double tol, const std::function<double()>& measure,
                  const std::string& detail) {
  CheckResult r{name, false, 0.0, tol, detail};
  try {
    r.value = measure();
    r.passed = std::isfinite(r.value) && r.value <= tol;
  } catch (const std::exception& e) {
    r.value = std::nan("");
    r.detail = detail + "; error: " + e.what();
  }
  return r;
}

}  // namespace

std::vector<CheckResult> run_selftest() {
  std::vector<CheckResult> out;

  out.push_back(check(
      "minimum_uncertainty", 1e-8,
      [] {
        const auto s = evolve_protocol(params(1.0, 0.0, 0.01, 0.005));
        double worst = 0.0;
        for (const auto& m : {s.after_phase1, s.rotated, s.pre_click}) {
          worst = std::max(worst, std::abs(m.product() - 0.25));
        }
        return worst;
      },
      "max |Vx Vp - 1/4| over the stages, gamma = 0"));

  out.push_back(check(
      "pumping_fixed_point", 1e-15,
      [] {
        const ProtocolParams p = params(0.0, 1.0);
        const MomentRates a = phase1_rhs(initial_scs(), p, 0.3);
        const MomentRates b = phase2_rhs(initial_scs(), p, 0.3);
        return std::max({std::abs(a.dvar_x), std::abs(a.dvar_p), std::abs(b.dvar_x),
                         std::abs(b.dvar_p)});
      },
      "kappa = 0 rates at (1/2, 1/2)"));

  out.push_back(check(
      "closed_form_vs_rk4", 1e-5,
      [] {
        double worst = 0.0;
        for (const ProtocolParams& p :
             {params(1.0, 1.0, 0.5, 0.2), params(0.1, 1.0, 1.0, 0.5), params(2.0, 0.5, 0.05, 0.3)}) {
          const GaussianMoments a = closed_form_final(p);
          const GaussianMoments b = evolve_protocol(p).pre_click;
          worst = std::max({worst, rel(b.var_x, a.var_x), rel(b.var_p, a.var_p)});
        }
        return worst;
      },
      "max relative difference on three parameter points"));

  out.push_back(check(
      "threshold_zero_identity", 0.0,
      [] {
        ProtocolParams p = params(1.0, 1.0);
        p.p_threshold = 0.0;
        return t2_for_threshold(0.3, p).t2;
      },
      "t2 needed for a zero threshold"));

  out.push_back(check(
      "airy_reference_values", 1e-12,
      [] {
        const double z[] = {0.0, 1.0, -1.0, 2.0, -2.0, -5.5};
        const double ai[] = {0.3550280538878172,  0.13529241631288147, 0.5355608832923522,
                             0.03492413042327436, 0.22740742820168564, 0.017781541276575247};
        double worst = 0.0;
        for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(airy_ai(z[i]) - ai[i]));
        return worst;
      },
      "max |Ai(z) - reference| at six points"));

  out.push_back(check(
      "one_photon_fock", 1e-5,
      [] {
        const FockDensityMatrix rho = reconstruct_auto(one_photon_grid());
        double worst = 0.0;
        for (int n = 0; n < rho.dim; ++n) {
          for (int m = 0; m < rho.dim; ++m) {
            worst = std::max(worst, std::abs(rho(n, m) - ((n == 1 && m == 1) ? 1.0 : 0.0)));
          }
        }
        return worst;
      },
      "max |rho - |1><1|| for t1 = t2 = 0, gamma = 0"));

  out.push_back(check(
      "one_photon_qfi", 1e-3,
      [] { return std::abs(qfi(one_photon_grid()).qfi - 6.0); }, "|QFI - 6|"));

  out.push_back(check(
      "one_photon_homodyne", 5e-3,
      [] { return rel(cfi_homodyne(one_photon_grid()), 6.0); }, "relative deviation from 6"));

  out.push_back(check(
      "vacuum_fisher", 1e-3,
      [] {
        const WignerGrid w = vacuum_grid();
        return std::max(std::abs(qfi(w).qfi - 2.0), rel(cfi_homodyne(w), 2.0));
      },
      "QFI and homodyne CFI of the vacuum against 2"));

  out.push_back(check(
      "cfi_below_qfi", 1e-3,
      [] {
        ScenarioSpec s;
        s.params = params(1.0, 1.0);
        s.t1_grid = {0.01, 0.1};
        s.gaussian_only = false;
        double worst = -1.0;
        for (const FisherReport& r : scenario_fig5(s)) {
          worst = std::max({worst, *r.cfi_homodyne / *r.qfi - 1.0, *r.cfi_phi / *r.qfi - 1.0});
        }
        return worst;
      },
      "max CFI/QFI - 1 on two protocol points"));

  return out;
}

}  // namespace hybridmeas::cli
