#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybridmeas/errors.hpp"
#include "hybridmeas/fock.hpp"
#include "hybridmeas/parallel.hpp"
#include "selftest.hpp"

namespace hybridmeas::cli {

namespace {

double num(bool b) { return b ? 1.0 : 0.0; }

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

void add_grid_rows(Table& t, const std::vector<Cell>& prefix, const PhaseSpaceGrid& g) {
  for (int i = 0; i < g.spec.x.n; ++i) {
    for (int j = 0; j < g.spec.p.n; ++j) {
      std::vector<Cell> row = prefix;
      row.push_back(g.spec.x.at(i));
      row.push_back(g.spec.p.at(j));
      row.push_back(g.at(i, j));
      t.add(std::move(row));
    }
  }
}

GridOptions dump_grid(const RunConfig& c) {
  GridOptions g = c.grid;
  g.points = c.dump_points;
  return g;
}

double min_value(const PhaseSpaceGrid& g) {
  return *std::min_element(g.values.begin(), g.values.end());
}

struct StageRow {
  std::string stage;
  double elapsed;
  GaussianMoments m;
  double hbar;
};

std::vector<StageRow> stage_rows(const ProtocolParams& p, const PreClickState& s,
                                 const WignerGrid& post) {
  const double t12 = p.t1 + p.t2;
  const GaussianMoments post_m{moment(post.raw(), 2, 0), moment(post.raw(), 0, 2)};
  return {
      {"initial", 0.0, initial_scs(), 1.0},
      {"phase1", p.t1, s.after_phase1, frame_hbar(p.gamma, p.t1)},
      {"rotated", p.t1, s.rotated, frame_hbar(p.gamma, p.t1)},
      {"phase2", t12, s.pre_click, s.bopp_damping},
      {"post_click", t12, post_m, s.bopp_damping},
  };
}

CommandOutput run_state(const RunConfig& c) {
  const ProtocolParams& p = c.params;
  const PreClickState s = evolve_protocol(p);
  const WignerGrid w = post_click_wigner(s, c.grid);

  CommandOutput out;
  Table moments{"state_moments", {"stage", "elapsed", "var_x", "var_p", "product", "hbar"}, {}};
  for (const auto& r : stage_rows(p, s, w)) {
    moments.add({r.stage, r.elapsed, r.m.var_x, r.m.var_p, r.m.product(), r.hbar});
  }
  out.tables.push_back(std::move(moments));

  const FockDensityMatrix rho = reconstruct_auto(w);
  const QfiResult q = qfi_displacement_detailed(rho);
  Table fisher{"state_fisher",
               {"t1", "t2", "p_click", "cfi_homodyne", "qfi", "fock_dim", "trace_deficit", "purity",
                "eigenvalues_clamped"},
               {}};
  fisher.add({p.t1, p.t2, detection_probability(p.t1, p.t2, p), cfi_homodyne(w), q.value,
              static_cast<double>(rho.dim), rho.trace_deficit, rho.purity(),
              static_cast<double>(q.clamped)});
  out.tables.push_back(std::move(fisher));

  Table wig{"state_wigner", {"x", "p", "w"}, {}};
  add_grid_rows(wig, {}, post_click_wigner(s, dump_grid(c)).raw());
  out.tables.push_back(std::move(wig));

  std::ostringstream fock;
  write_json(fock, rho);
  out.documents.push_back({"state_fock", fock.str()});
  return out;
}

CommandOutput run_fig2(const RunConfig& c) {
  const ProtocolParams& p = c.params;
  const PreClickState s = evolve_protocol(p);
  const GridOptions g = dump_grid(c);
  const double h1 = frame_hbar(p.gamma, p.t1);
  auto gauss = [&](const GaussianMoments& m, double hbar) {
    return gaussian_wigner(m, default_grid(m, std::nullopt, g), hbar);
  };
  const WignerGrid post = post_click_wigner(s, g);
  const std::vector<WignerGrid> grids = {gauss(initial_scs(), 1.0), gauss(s.after_phase1, h1),
                                         gauss(s.rotated, h1), gauss(s.pre_click, s.bopp_damping),
                                         post};
  const std::vector<StageRow> rows = stage_rows(p, s, post);

  CommandOutput out;
  Table stages{"fig2_stages", {"stage", "elapsed", "var_x", "var_p", "hbar", "w_min"}, {}};
  Table wig{"fig2", {"stage", "x", "p", "w"}, {}};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    stages.add({rows[k].stage, rows[k].elapsed, rows[k].m.var_x, rows[k].m.var_p, rows[k].hbar,
                min_value(grids[k].raw())});
    add_grid_rows(wig, {rows[k].stage}, grids[k].raw());
  }
  out.tables.push_back(std::move(stages));
  out.tables.push_back(std::move(wig));
  return out;
}

CommandOutput run_fig3(const RunConfig& c) {
  CommandOutput out;
  Table t{"fig3", {"threshold", "t1", "t2", "total", "reachable"}, {}};
  for (double threshold : c.thresholds) {
    ProtocolParams p = c.params;
    p.p_threshold = threshold;
    for (const TimeBudget& b : total_time_curve(c.t1_grid, p, {}, c.jobs)) {
      if (b.reachable) {
        t.add({threshold, b.t1, b.t2, b.total, 1.0});
      } else {
        t.add({threshold, b.t1, std::monostate{}, std::monostate{}, 0.0});
      }
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

std::vector<Cell> fisher_row(const ProtocolParams& p, const FisherReport& r) {
  return {p.kappa,
          p.gamma,
          r.t1,
          r.t2,
          std::string(to_string(r.mode)),
          num(r.reachable),
          cell(r.cfi_gaussian),
          cell(r.cfi_homodyne),
          cell(r.cfi_phi),
          cell(r.qfi),
          cell(r.phi_norm),
          cell(r.phi_tail),
          r.qfi ? Cell(static_cast<double>(r.fock_dim)) : Cell(std::monostate{}),
          join(r.flags, ";")};
}

ScenarioSpec scenario(const RunConfig& c, const ProtocolParams& p, PostSelection mode) {
  ScenarioSpec s;
  s.params = p;
  s.t1_grid = c.t1_grid;
  s.mode = mode;
  s.with_qfi = c.with_qfi;
  s.phi = c.phi;
  s.grid = c.grid;
  s.jobs = c.jobs;
  return s;
}

CommandOutput run_fig4(const RunConfig& c) {
  CommandOutput out;
  Table t{"fig4", fisher_columns(), {}};
  for (const Fig4Curve& curve : c.curves) {
    ProtocolParams p = c.params;
    p.kappa = curve.kappa_over_gamma * p.gamma;
    for (const FisherReport& r : scenario_fig4(scenario(c, p, curve.mode))) t.add(fisher_row(p, r));
  }
  out.tables.push_back(std::move(t));
  return out;
}

CommandOutput run_fig5(const RunConfig& c) {
  CommandOutput out;
  Table t{"fig5", fisher_columns(), {}};
  for (const FisherReport& r : scenario_fig5(scenario(c, c.params, PostSelection::Immediate))) {
    t.add(fisher_row(c.params, r));
  }
  out.tables.push_back(std::move(t));
  return out;
}

CommandOutput run_fig6(const RunConfig& c) {
  GridSpec spec;
  spec.x = {-c.phi_extent, c.phi_extent, c.dump_points};
  spec.p = spec.x;
  CommandOutput out;
  Table t{"fig6", {"phi", "x", "p", "w"}, {}};
  for (double phi : c.phis) add_grid_rows(t, {phi}, phi_wigner({phi}, spec));
  out.tables.push_back(std::move(t));
  return out;
}

CommandOutput run_sweep(const RunConfig& c) {
  struct Point {
    double t1 = 0.0;
    double t2 = 0.0;
    std::vector<Cell> row;
  };
  std::vector<Point> points;
  for (double t1 : c.t1_grid) {
    if (c.mode == PostSelection::Threshold) {
      points.push_back({t1, 0.0, {}});
    } else {
      for (double t2 : c.t2_grid) points.push_back({t1, t2, {}});
    }
  }
  auto wants = [&](const char* q) {
    return std::find(c.quantities.begin(), c.quantities.end(), q) != c.quantities.end();
  };
  PhiOptions phi = c.phi;
  phi.jobs = 1;

  parallel_for(points.size(), c.jobs, [&](std::size_t i) {
    Point& pt = points[i];
    ProtocolParams p = c.params;
    p.t1 = pt.t1;
    std::vector<std::string> flags;
    std::optional<double> gauss, hom, phi_cfi, q;
    if (wants("gaussian")) gauss = cfi_homodyne(gaussian_only_wigner(p, c.grid));
    if (c.mode == PostSelection::Threshold) {
      const ThresholdResult th = t2_for_threshold(pt.t1, p);
      if (!th.reachable) {
        std::ostringstream os;
        os << "threshold_unreachable(p_at_horizon=" << th.probability_at_horizon << ")";
        pt.row = {pt.t1, std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{},
                  std::monostate{}, cell(gauss), std::monostate{}, std::monostate{},
                  std::monostate{}, os.str()};
        return;
      }
      pt.t2 = th.t2;
    }
    p.t2 = pt.t2;
    const PreClickState s = evolve_protocol(p);
    if (wants("homodyne") || wants("qfi")) {
      const WignerGrid w = post_click_wigner(s, c.grid);
      if (wants("homodyne")) hom = cfi_homodyne(w);
      if (wants("qfi")) {
        const QfiReport r = qfi(w);
        q = r.qfi;
        if (r.clamped > 0) flags.push_back("eigenvalues_clamped=" + std::to_string(r.clamped));
      }
    }
    if (wants("phi")) phi_cfi = cfi_phi_subtracted(s.pre_click, s.bopp_damping, phi).cfi;
    if (q && ((hom && *hom > *q * 1.001) || (phi_cfi && *phi_cfi > *q * 1.001))) {
      flags.emplace_back("cfi_exceeds_qfi");
    }
    pt.row = {pt.t1,
              pt.t2,
              s.pre_click.var_x,
              s.pre_click.var_p,
              s.bopp_damping,
              detection_probability(pt.t1, pt.t2, p),
              cell(gauss),
              cell(hom),
              cell(phi_cfi),
              cell(q),
              join(flags, ";")};
  });

  CommandOutput out;
  Table t{"sweep",
          {"t1", "t2", "var_x", "var_p", "hbar", "p_click", "cfi_gaussian", "cfi_homodyne", "cfi_phi",
           "qfi", "flags"},
          {}};
  for (auto& pt : points) t.add(std::move(pt.row));
  out.tables.push_back(std::move(t));
  return out;
}

CommandOutput run_selftest_command(const RunConfig&) {
  CommandOutput out;
  Table t{"selftest", {"check", "passed", "value", "tolerance", "detail"}, {}};
  for (const CheckResult& r : run_selftest()) {
    t.add({r.name, num(r.passed), r.value, r.tolerance, r.detail});
    out.passed = out.passed && r.passed;
  }
  out.tables.push_back(std::move(t));
  return out;
}

}  // namespace

const std::vector<std::string>& fisher_columns() {
  static const std::vector<std::string> cols = {
      "kappa", "gamma",    "t1",       "t2",      "mode",     "reachable", "cfi_gaussian",
      "cfi_homodyne", "cfi_phi", "qfi", "phi_norm", "phi_tail", "fock_dim", "flags"};
  return cols;
}

CommandOutput run_command(const RunConfig& c) {
  switch (c.command) {
    case Command::State: return run_state(c);
    case Command::Fig2: return run_fig2(c);
    case Command::Fig3: return run_fig3(c);
    case Command::Fig4: return run_fig4(c);
    case Command::Fig5: return run_fig5(c);
    case Command::Fig6: return run_fig6(c);
    case Command::Sweep: return run_sweep(c);
    case Command::Selftest: return run_selftest_command(c);
  }
  throw ValidationError({"unhandled command"});
}

}  // namespace hybridmeas::cli
