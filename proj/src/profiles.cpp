#include "shockmeet/profiles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shockmeet/error.hpp"
#include "shockmeet/rng.hpp"

namespace shockmeet {

namespace {

constexpr double kMeetingTolerance = 1e-9;

bool close_relative(double a, double b) {
  return std::abs(a - b) <= kMeetingTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

StepProfile::StepProfile(std::vector<double> breakpoints, std::vector<double> densities)
    : breakpoints_(std::move(breakpoints)), densities_(std::move(densities)) {
  if (breakpoints_.empty()) throw Error(ErrorKind::kBadInput, "profile needs at least one shock");
  if (densities_.size() != breakpoints_.size() + 1) {
    throw Error(ErrorKind::kBadInput, "need exactly one more density than breakpoints");
  }
  if (breakpoints_.size() >= kMaxLabels) throw Error(ErrorKind::kBadInput, "too many shocks");
  for (double c : breakpoints_) {
    if (!std::isfinite(c)) throw Error(ErrorKind::kBadInput, "breakpoints must be finite");
  }
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k - 1] < breakpoints_[k])) {
      throw Error(ErrorKind::kBadInput, "breakpoints must be strictly increasing");
    }
  }
  if (!(densities_.front() >= 0.0) || !(densities_.back() <= 1.0)) {
    throw Error(ErrorKind::kBadInput, "densities must lie in [0, 1]");
  }
  for (std::size_t k = 1; k < densities_.size(); ++k) {
    if (!(densities_[k - 1] < densities_[k])) {
      throw Error(ErrorKind::kBadInput, "densities must be strictly increasing");
    }
  }
}

MeetingScenario validate_meeting(const StepProfile& profile, std::optional<double> t_star_hint) {
  const int n = profile.shocks();
  if (t_star_hint && !(*t_star_hint > 0.0 && std::isfinite(*t_star_hint))) {
    throw Error(ErrorKind::kBadInput, "t_star hint must be positive");
  }
  double t_star = 0.0;
  if (n == 1) {
    if (!t_star_hint) throw Error(ErrorKind::kMissingHint, "a single shock needs an explicit t_star");
    t_star = *t_star_hint;
  } else {
    // Shocks k and k+1 meet when c_k + v_k t = c_{k+1} + v_{k+1} t.
    auto pair_time = [&](int k) {
      return (profile.breakpoint(k + 1) - profile.breakpoint(k)) /
             (profile.density(k + 1) - profile.density(k - 1));
    };
    t_star = pair_time(1);
    for (int k = 2; k < n; ++k) {
      if (!close_relative(pair_time(k), t_star)) {
        std::ostringstream msg;
        msg << "shocks 1,2 meet at t=" << t_star << " but shocks " << k << "," << k + 1
            << " meet at t=" << pair_time(k);
        throw Error(ErrorKind::kInconsistentMeeting, msg.str());
      }
    }
    if (t_star_hint && !close_relative(*t_star_hint, t_star)) {
      std::ostringstream msg;
      msg << "hinted t_star=" << *t_star_hint << " but shocks meet at t=" << t_star;
      throw Error(ErrorKind::kInconsistentMeeting, msg.str());
    }
  }
  const double r_star = profile.breakpoint(1) + profile.velocity(1) * t_star;
  for (int k = 2; k <= n; ++k) {
    double r_k = profile.breakpoint(k) + profile.velocity(k) * t_star;
    if (!close_relative(r_k, r_star)) {
      throw Error(ErrorKind::kInconsistentMeeting, "meeting positions disagree");
    }
  }
  return MeetingScenario{profile, r_star, t_star};
}

MeetingScenario parse_scenario(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
    auto breakpoints = doc.at("breakpoints").get<std::vector<double>>();
    auto densities = doc.at("densities").get<std::vector<double>>();
    std::optional<double> hint;
    if (doc.contains("t_star_hint") && !doc["t_star_hint"].is_null()) {
      hint = doc["t_star_hint"].get<double>();
    }
    return validate_meeting(StepProfile(std::move(breakpoints), std::move(densities)), hint);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kBadInput, std::string("scenario JSON: ") + e.what());
  }
}

MeetingScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open scenario file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::int64_t lattice_site(double macroscopic, double epsilon) {
  double scaled = macroscopic / epsilon;
  // Snap representation error (e.g. 0.6 / 0.0025 = 239.99999999999997) to the integer.
  double nearest = std::round(scaled);
  if (std::abs(scaled - nearest) <= 1e-9 * std::max(1.0, std::abs(scaled))) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::floor(scaled));
}

MulticlassConfig sample_initial(const MeetingScenario& scenario, double epsilon, Window window,
                                std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::kBadInput, "epsilon must lie in (0, 1]");
  const auto& profile = scenario.profile;
  const int n = profile.shocks();
  std::vector<std::int64_t> tagged(n);
  for (int k = 1; k <= n; ++k) {
    tagged[k - 1] = lattice_site(profile.breakpoint(k), epsilon);
    if (!window.contains(tagged[k - 1])) {
      throw Error(ErrorKind::kWindowTooSmall,
                  "tagged site " + std::to_string(tagged[k - 1]) + " outside window");
    }
    if (k > 1 && tagged[k - 1] == tagged[k - 2]) {
      throw Error(ErrorKind::kTaggedCollision, "epsilon too large: tagged sites coincide");
    }
  }

  Rng rng(seed);
  const auto& rho = profile.densities();
  std::vector<Priority> priority(static_cast<std::size_t>(window.size()));
  for (auto& p : priority) {
    double u = rng.uniform();
    auto it = std::upper_bound(rho.begin(), rho.end(), u);  // first rho_k > u
    p = it == rho.end() ? kHole : static_cast<Priority>(it - rho.begin());
  }
  for (int k = 1; k <= n; ++k) {
    priority[static_cast<std::size_t>(tagged[k - 1] - window.lo)] = static_cast<Priority>(k);
  }
  return MulticlassConfig(window, std::move(priority), std::move(tagged));
}

CylinderFunction::CylinderFunction(int radius, std::vector<double> table)
    : radius_(radius), table_(std::move(table)) {
  if (radius_ < 0 || radius_ > kMaxRadius) {
    throw Error(ErrorKind::kBadInput, "cylinder radius must lie in [0, 12]");
  }
  if (table_.size() != (std::size_t{1} << width())) {
    throw Error(ErrorKind::kBadInput, "cylinder table needs 2^(2M+1) entries");
  }
  for (double v : table_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kBadInput, "cylinder table values must be finite");
  }
}

CylinderFunction CylinderFunction::occupancy(int offset) {
  int radius = std::abs(offset);
  std::vector<double> table(std::size_t{1} << (2 * radius + 1));
  for (std::uint32_t pattern = 0; pattern < table.size(); ++pattern) {
    table[pattern] = (pattern >> (offset + radius)) & 1u;
  }
  return CylinderFunction(radius, std::move(table));
}

CylinderFunction CylinderFunction::zero(int radius) {
  return CylinderFunction(radius, std::vector<double>(std::size_t{1} << (2 * radius + 1), 0.0));
}

CylinderFunction CylinderFunction::from_pattern_indicator(int radius, std::uint32_t pattern) {
  std::vector<double> table(std::size_t{1} << (2 * radius + 1), 0.0);
  if (pattern >= table.size()) throw Error(ErrorKind::kBadInput, "pattern wider than window");
  table[pattern] = 1.0;
  return CylinderFunction(radius, std::move(table));
}

double nu_expectation(const CylinderFunction& f, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorKind::kBadInput, "rho must lie in [0, 1]");
  const int w = f.width();
  double total = 0.0;
  for (std::uint32_t pattern = 0; pattern < f.table().size(); ++pattern) {
    int ones = std::popcount(pattern);
    total += f(pattern) * std::pow(rho, ones) * std::pow(1.0 - rho, w - ones);
  }
  return total;
}

}  // namespace shockmeet
