#include "hybridmeas/core.hpp"

#include <cmath>
#include <sstream>

#include "hybridmeas/errors.hpp"

namespace hybridmeas {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) os << "; ";
    os << items[i];
  }
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error("invalid input: " + join(problems)), problems_(std::move(problems)) {}

void ProtocolParams::validate() const {
  std::vector<std::string> bad;
  auto finite_nonneg = [&](double v, const char* name) {
    if (!std::isfinite(v)) {
      bad.push_back(std::string(name) + " must be finite");
    } else if (v < 0.0) {
      bad.push_back(std::string(name) + " must be >= 0");
    }
  };
  finite_nonneg(kappa, "kappa");
  finite_nonneg(gamma, "gamma");
  finite_nonneg(t1, "t1");
  finite_nonneg(t2, "t2");
  if (n_atoms < 1) bad.emplace_back("n_atoms must be >= 1");
  if (!(eta >= 0.0 && eta <= 1.0)) bad.emplace_back("eta must lie in [0, 1]");
  if (!(p_threshold >= 0.0 && p_threshold < 1.0)) {
    bad.emplace_back("p_threshold must lie in [0, 1)");
  }
  if (std::isfinite(kappa) && std::isfinite(gamma) && !(kappa > 0.0 || gamma > 0.0)) {
    bad.emplace_back("at least one of kappa, gamma must be > 0");
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

void GaussianMoments::validate() const {
  std::vector<std::string> bad;
  if (!(std::isfinite(var_x) && var_x > 0.0)) bad.emplace_back("var_x must be finite and > 0");
  if (!(std::isfinite(var_p) && var_p > 0.0)) bad.emplace_back("var_p must be finite and > 0");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

std::string_view to_string(StageTag tag) noexcept {
  switch (tag) {
    case StageTag::Initial: return "initial";
    case StageTag::PhaseI: return "phase1";
    case StageTag::Rotated: return "rotated";
    case StageTag::PhaseII: return "phase2";
    case StageTag::PostClick: return "post_click";
  }
  return "unknown";
}

ProtocolStage ProtocolStage::advance(StageTag next, double duration) const {
  std::vector<std::string> bad;
  if (static_cast<int>(next) != static_cast<int>(tag_) + 1) {
    bad.push_back("stage transition " + std::string(to_string(tag_)) + " -> " +
                  std::string(to_string(next)) + " is out of order");
  }
  if (!(std::isfinite(duration) && duration >= 0.0)) {
    bad.emplace_back("stage duration must be finite and >= 0");
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return ProtocolStage(next, elapsed_ + duration);
}

}  // namespace hybridmeas
