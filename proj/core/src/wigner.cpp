#include "hybridmeas/wigner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hybridmeas/errors.hpp"

namespace hybridmeas {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Trapezoid weight of node i on an axis with n nodes.
double tw(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

std::string bounds_hint(double sd_x, double sd_p, double span) {
  std::ostringstream os;
  os << "suggested bounds x in [" << -span * sd_x << ", " << span * sd_x << "], p in ["
     << -span * sd_p << ", " << span * sd_p << "]";
  return os.str();
}

PhaseSpaceGrid sample(const GridSpec& spec, double hbar, auto&& f) {
  PhaseSpaceGrid g{spec, std::vector<double>(spec.size()), hbar};
  for (int i = 0; i < spec.x.n; ++i) {
    const double x = spec.x.at(i);
    for (int j = 0; j < spec.p.n; ++j) g.at(i, j) = f(x, spec.p.at(j));
  }
  return g;
}

void scale_values(PhaseSpaceGrid& g, double s) {
  for (double& v : g.values) v *= s;
}

}  // namespace

void GridAxis::validate(const char* name) const {
  if (!(std::isfinite(min) && std::isfinite(max) && min < max) || n < 2) {
    std::ostringstream os;
    os << name << " axis needs finite min < max and at least 2 points (got [" << min << ", "
       << max << "], n=" << n << ")";
    throw GridError(os.str());
  }
}

void GridSpec::validate() const {
  x.validate("x");
  p.validate("p");
}

GridSpec default_grid(const GaussianMoments& m, std::optional<double> bopp_damping,
                      const GridOptions& opts) {
  m.validate();
  if (opts.points < 2 || !(opts.span_sd > 0.0)) {
    throw GridError("grid options need points >= 2 and span_sd > 0");
  }
  double vx = m.var_x;
  double vp = m.var_p;
  if (bopp_damping) {
    const double c = *bopp_damping;
    vx += c * c / (2.0 * m.var_p);
    vp *= 3.0;
  }
  const double hx = opts.span_sd * std::sqrt(vx);
  const double hp = opts.span_sd * std::sqrt(vp);
  return {{-hx, hx, opts.points}, {-hp, hp, opts.points}};
}

double integrate(const PhaseSpaceGrid& g) { return moment(g, 0, 0); }

double moment(const PhaseSpaceGrid& g, int power_x, int power_p) {
  const GridSpec& s = g.spec;
  double total = 0.0;
  for (int i = 0; i < s.x.n; ++i) {
    const double wx = tw(i, s.x.n) * std::pow(s.x.at(i), power_x);
    double row = 0.0;
    for (int j = 0; j < s.p.n; ++j) {
      row += tw(j, s.p.n) * std::pow(s.p.at(j), power_p) * g.at(i, j);
    }
    total += wx * row;
  }
  return total * s.x.step() * s.p.step();
}

WignerGrid::WignerGrid(PhaseSpaceGrid g, double tol) : g_(std::move(g)) {
  g_.spec.validate();
  if (g_.values.size() != g_.spec.size()) throw GridError("grid value count does not match axes");
  if (!(std::isfinite(g_.hbar) && g_.hbar > 0.0)) throw GridError("grid hbar must be > 0");
  for (double v : g_.values) {
    if (!std::isfinite(v)) throw GridError("non-finite Wigner value on grid");
  }
  const double norm = integrate(g_);
  if (std::abs(norm - 1.0) > tol) {
    std::ostringstream os;
    os << "Wigner grid integrates to " << norm << ", off by more than " << tol;
    throw GridError(os.str());
  }
}

double gaussian_wigner_value(const GaussianMoments& m, double x, double p) {
  return std::exp(-x * x / (2.0 * m.var_x) - p * p / (2.0 * m.var_p)) /
         (kTwoPi * std::sqrt(m.var_x * m.var_p));
}

WignerGrid gaussian_wigner(const GaussianMoments& m, const GridSpec& spec, double hbar) {
  m.validate();
  spec.validate();
  const double sx = std::sqrt(m.var_x);
  const double sp = std::sqrt(m.var_p);
  const bool spans = spec.x.min <= -6.0 * sx && spec.x.max >= 6.0 * sx &&
                     spec.p.min <= -6.0 * sp && spec.p.max >= 6.0 * sp;
  if (!spans) throw GridError("grid narrower than ±6 sd; " + bounds_hint(sx, sp, 8.0));
  PhaseSpaceGrid g =
      sample(spec, hbar, [&](double x, double p) { return gaussian_wigner_value(m, x, p); });
  try {
    return WignerGrid(std::move(g));
  } catch (const GridError& e) {
    throw GridError(std::string(e.what()) + "; " + bounds_hint(sx, sp, 8.0));
  }
}

void SubtractionContext::validate() const {
  std::vector<std::string> bad;
  if (!(bopp_damping >= 0.0 && bopp_damping <= 1.0)) bad.emplace_back("bopp_damping must lie in [0, 1]");
  if (!(std::isfinite(norm) && norm > 0.0)) bad.emplace_back("norm must be finite and > 0");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

double subtracted_wigner_value(const GaussianMoments& m, const SubtractionContext& ctx, double x,
                               double p) {
  const double c2 = ctx.bopp_damping * ctx.bopp_damping;
  const double poly = p * p + c2 / 4.0 * (x * x / (m.var_x * m.var_x) - 1.0 / m.var_x);
  return poly * gaussian_wigner_value(m, x, p) / ctx.norm;
}

WignerGrid photon_subtract(const WignerGrid& pre, const GaussianMoments& m,
                           const SubtractionContext& ctx) {
  m.validate();
  ctx.validate();
  if (std::abs(ctx.norm - m.var_p) > 1e-12 * m.var_p) {
    throw ValidationError({"subtraction norm must equal the pre-click var_p"});
  }
  const GridSpec& s = pre.spec();
  const double c2 = ctx.bopp_damping * ctx.bopp_damping;
  PhaseSpaceGrid g{s, std::vector<double>(s.size()), pre.hbar()};
  for (int i = 0; i < s.x.n; ++i) {
    const double x = s.x.at(i);
    const double xpart = c2 / 4.0 * (x * x / (m.var_x * m.var_x) - 1.0 / m.var_x);
    for (int j = 0; j < s.p.n; ++j) {
      const double p = s.p.at(j);
      g.at(i, j) = (p * p + xpart) * pre.at(i, j) / ctx.norm;
    }
  }
  const double norm = integrate(g);
  if (std::abs(norm - 1.0) > WignerGrid::kNormTol) {
    std::ostringstream os;
    os << "photon-subtracted grid integrates to " << norm << " before renormalization; "
       << bounds_hint(std::sqrt(m.var_x + c2 / (2.0 * m.var_p)), std::sqrt(3.0 * m.var_p), 8.0);
    throw GridError(os.str());
  }
  scale_values(g, 1.0 / norm);
  return WignerGrid(std::move(g));
}

WignerGrid displace_x(const WignerGrid& w, double theta, int stencil, double clip_tol) {
  if (!std::isfinite(theta)) throw ValidationError({"displacement must be finite"});
  if (stencil < 2) throw ValidationError({"interpolation stencil needs >= 2 points"});
  if (theta == 0.0) return w;
  const GridSpec& s = w.spec();
  const double h = s.x.step();

  // Absolute mass in the columns that move off the grid.
  const int lost_cols = std::min(s.x.n, static_cast<int>(std::ceil(std::abs(theta) / h)) + stencil / 2);
  double lost = 0.0;
  double total = 0.0;
  for (int i = 0; i < s.x.n; ++i) {
    const bool leaving = theta > 0.0 ? i >= s.x.n - lost_cols : i < lost_cols;
    for (int j = 0; j < s.p.n; ++j) {
      const double a = std::abs(w.at(i, j));
      total += a;
      if (leaving) lost += a;
    }
  }
  if (lost > clip_tol * total) {
    std::ostringstream os;
    os << "displacement by " << theta << " pushes " << lost / total
       << " of the absolute mass off the grid (tolerance " << clip_tol << ")";
    throw GridError(os.str());
  }

  PhaseSpaceGrid g{s, std::vector<double>(s.size(), 0.0), w.hbar()};
  const int left = (stencil - 1) / 2;
  std::vector<double> weight(stencil);
  for (int i = 0; i < s.x.n; ++i) {
    // Source position in index units.
    const double u = static_cast<double>(i) - theta / h;
    const int first =
        static_cast<int>(stencil % 2 ? std::lround(u) : std::lround(std::floor(u))) - left;
    for (int k = 0; k < stencil; ++k) {
      double l = 1.0;
      for (int m = 0; m < stencil; ++m) {
        if (m != k) l *= (u - (first + m)) / static_cast<double>(k - m);
      }
      weight[k] = l;
    }
    for (int k = 0; k < stencil; ++k) {
      const int src = first + k;
      if (src < 0 || src >= s.x.n) continue;
      for (int j = 0; j < s.p.n; ++j) g.at(i, j) += weight[k] * w.at(src, j);
    }
  }
  return WignerGrid(std::move(g), 10.0 * WignerGrid::kNormTol);
}

std::vector<double> marginal_x(const WignerGrid& w) {
  const GridSpec& s = w.spec();
  const double hp = s.p.step();
  std::vector<double> out(s.x.n);
  for (int i = 0; i < s.x.n; ++i) {
    double row = 0.0;
    for (int j = 0; j < s.p.n; ++j) row += tw(j, s.p.n) * w.at(i, j);
    out[i] = std::max(0.0, row * hp);
  }
  return out;
}

void PhiState::validate() const {
  if (!std::isfinite(phi) || phi == 0.0) throw DomainError("phi must be finite and nonzero");
}

double phi_wigner_value(const PhiState& st, double x, double p) {
  const double phi = st.phi;
  const double s = std::cbrt(4.0 / phi);
  return std::abs(s) / kTwoPi * (2.0 * p * p - x / phi) * airy_ai(s * (phi * p * p - x));
}

PhaseSpaceGrid phi_wigner(const PhiState& st, const GridSpec& spec) {
  st.validate();
  spec.validate();
  return sample(spec, 1.0, [&](double x, double p) { return phi_wigner_value(st, x, p); });
}

double overlap(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) {
  if (!(a.spec == b.spec)) throw GridError("overlap needs identical grids");
  if (a.hbar != b.hbar) throw GridError("overlap needs grids with the same hbar");
  const GridSpec& s = a.spec;
  double total = 0.0;
  for (int i = 0; i < s.x.n; ++i) {
    double row = 0.0;
    for (int j = 0; j < s.p.n; ++j) row += tw(j, s.p.n) * a.at(i, j) * b.at(i, j);
    total += tw(i, s.x.n) * row;
  }
  return kTwoPi * a.hbar * total * s.x.step() * s.p.step();
}

double overlap(const WignerGrid& a, const WignerGrid& b) { return overlap(a.raw(), b.raw()); }

double balanced_scale(const GaussianMoments& m, double hbar) {
  m.validate();
  return std::sqrt(hbar) * std::pow(m.var_x / m.var_p, 0.25);
}

WignerGrid to_canonical(const WignerGrid& w, double scale) {
  if (!(std::isfinite(scale) && scale > 0.0)) throw ValidationError({"scale must be > 0"});
  const double hbar = w.hbar();
  PhaseSpaceGrid g = w.raw();
  g.spec.x = {w.spec().x.min / scale, w.spec().x.max / scale, w.spec().x.n};
  g.spec.p = {w.spec().p.min * scale / hbar, w.spec().p.max * scale / hbar, w.spec().p.n};
  g.hbar = 1.0;
  scale_values(g, hbar);
  return WignerGrid(std::move(g));
}

void write_csv(std::ostream& os, const PhaseSpaceGrid& g) {
  os << "x,p,value\n";
  char buf[96];
  for (int i = 0; i < g.spec.x.n; ++i) {
    for (int j = 0; j < g.spec.p.n; ++j) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", g.spec.x.at(i), g.spec.p.at(j),
                    g.at(i, j));
      os << buf;
    }
  }
}

namespace {

constexpr char kMagic[8] = {'H', 'M', 'W', 'G', 'R', 'I', 'D', '1'};

static_assert(std::endian::native == std::endian::little,
              "binary grid dumps assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw GridError("truncated grid dump");
  return v;
}

}  // namespace

void write_binary(std::ostream& os, const PhaseSpaceGrid& g) {
  os.write(kMagic, sizeof kMagic);
  put(os, g.spec.x.min);
  put(os, g.spec.x.max);
  put(os, g.spec.p.min);
  put(os, g.spec.p.max);
  put(os, g.hbar);
  put(os, static_cast<std::uint64_t>(g.spec.x.n));
  put(os, static_cast<std::uint64_t>(g.spec.p.n));
  os.write(reinterpret_cast<const char*>(g.values.data()),
           static_cast<std::streamsize>(g.values.size() * sizeof(double)));
}

PhaseSpaceGrid read_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw GridError("not a grid dump (bad magic)");
  }
  PhaseSpaceGrid g;
  g.spec.x.min = get<double>(is);
  g.spec.x.max = get<double>(is);
  g.spec.p.min = get<double>(is);
  g.spec.p.max = get<double>(is);
  g.hbar = get<double>(is);
  const auto nx = get<std::uint64_t>(is);
  const auto np = get<std::uint64_t>(is);
  if (nx < 2 || np < 2 || nx > (1u << 20) || np > (1u << 20)) {
    throw GridError("grid dump has implausible axis sizes");
  }
  g.spec.x.n = static_cast<int>(nx);
  g.spec.p.n = static_cast<int>(np);
  g.spec.validate();
  g.values.resize(g.spec.size());
  if (!is.read(reinterpret_cast<char*>(g.values.data()),
               static_cast<std::streamsize>(g.values.size() * sizeof(double)))) {
    throw GridError("truncated grid dump");
  }
  return g;
}

}  // namespace hybridmeas
