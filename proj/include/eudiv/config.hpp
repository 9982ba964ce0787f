#pragma once

// Flat key=value experiment configs with command-line overrides.

#include "eudiv/engine.hpp"
#include "eudiv/errors.hpp"
#include "eudiv/interaction.hpp"
#include "eudiv/utility.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace eudiv {

struct ExperimentConfig {
  std::uint64_t actions = 2;
  std::string perceptions = "2";  // a size >= 2, or "naturals"
  std::string prior = "geometric";
  std::string utility = "discounted";
  Rational discount{1, 2};
  std::string policy = "constant:0";
  std::uint64_t policy_budget = 1000;
  std::string history;            // path; empty means the empty history
  std::uint64_t cutoff = 64;
  std::uint64_t horizon = 5;
  std::uint64_t budget = 1000;
  std::string schedule;           // "N:L:T,N:L:T,..."; empty means one step
  std::uint64_t target = 10;
  std::uint64_t attempts = 64;
  std::uint64_t theta_budget = 10000;
  Natural pad = 0;
  std::string direction = "above";
  std::string source = "doubling";
  unsigned threads = 1;

  Alphabets alphabets() const;
  Context context() const { return {alphabets(), Prior::from_name(prior), threads}; }
  UtilityPtr make_spec() const { return make_utility(utility, discount); }
  Policy make_policy() const;
  History load_history() const;
  std::vector<ScheduleStep> make_schedule() const;
  ScanCaps make_caps() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
  try {
    Natural n = parse_natural(v);
    if (!fits_u64(n)) throw std::invalid_argument("too large");
    return to_u64(n);
  } catch (const std::invalid_argument&) {
    throw ConfigError("'" + key + "' expects a natural number, got '" + v + "'");
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace detail

/// Applies one key=value assignment.
inline void set_option(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_count;
  if (key == "actions") c.actions = parse_count(key, value);
  else if (key == "perceptions") c.perceptions = value;
  else if (key == "prior") c.prior = value;
  else if (key == "utility") c.utility = value;
  else if (key == "discount") {
    try {
      c.discount = parse_fraction(value);
    } catch (const std::invalid_argument&) {
      throw ConfigError("'discount' expects a rational, got '" + value + "'");
    }
  } else if (key == "policy") c.policy = value;
  else if (key == "policy_budget") c.policy_budget = parse_count(key, value);
  else if (key == "history") c.history = value;
  else if (key == "cutoff") c.cutoff = parse_count(key, value);
  else if (key == "horizon") c.horizon = parse_count(key, value);
  else if (key == "budget") c.budget = parse_count(key, value);
  else if (key == "schedule") c.schedule = value;
  else if (key == "target") c.target = parse_count(key, value);
  else if (key == "attempts") c.attempts = parse_count(key, value);
  else if (key == "theta_budget") c.theta_budget = parse_count(key, value);
  else if (key == "pad") c.pad = from_u64(parse_count(key, value));
  else if (key == "direction") c.direction = value;
  else if (key == "source") c.source = value;
  else if (key == "threads") c.threads = static_cast<unsigned>(parse_count(key, value));
  else throw ConfigError("unknown config key '" + key + "'");
}

/// "key=value" with whitespace allowed around both parts.
inline void apply_assignment(ExperimentConfig& c, const std::string& line) {
  auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
  set_option(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
}

/// One assignment per line; '#' starts a comment.
inline ExperimentConfig read_config(std::istream& in, ExperimentConfig c = {}) {
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    apply_assignment(c, line);
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  ExperimentConfig c = read_config(in);
  // Relative history paths resolve against the config file's directory.
  if (!c.history.empty() && std::filesystem::path(c.history).is_relative())
    c.history = (path.parent_path() / c.history).string();
  return c;
}

inline Alphabets ExperimentConfig::alphabets() const {
  try {
    if (perceptions == "naturals") return Alphabets::naturals(actions);
    return Alphabets::finite(actions, detail::parse_count("perceptions", perceptions));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline Policy ExperimentConfig::make_policy() const {
  auto colon = policy.find(':');
  const std::string kind = policy.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : policy.substr(colon + 1);
  if (kind == "constant") return ConstantAction{from_u64(detail::parse_count("policy", arg))};
  if (kind == "scripted") {
    ScriptedActions s;
    if (!arg.empty())
      for (const auto& item : detail::split(arg, ',')) s.script.push_back(from_u64(detail::parse_count("policy", item)));
    return s;
  }
  if (kind == "program") {
    try {
      return ProgramPolicy{decode(parse_natural(arg)), StepBudget{std::max<std::uint64_t>(policy_budget, 1)}, 0};
    } catch (const std::invalid_argument&) {
      throw ConfigError("'policy' program index must be a natural, got '" + arg + "'");
    }
  }
  throw ConfigError("unknown policy '" + policy + "' (expected constant:A, scripted:A,B,... or program:INDEX)");
}

inline History ExperimentConfig::load_history() const {
  if (history.empty()) return {};
  std::ifstream in(history);
  if (!in) throw ConfigError("cannot open history file " + history);
  History h = read_history(in);
  h.validate(alphabets());
  return h;
}

inline std::vector<ScheduleStep> ExperimentConfig::make_schedule() const {
  auto step_budget = [](std::uint64_t t) {
    if (t == 0) throw ConfigError("step budgets must be at least 1");
    return StepBudget{t};
  };
  if (schedule.empty()) return {{cutoff, static_cast<std::size_t>(horizon), step_budget(budget)}};
  std::vector<ScheduleStep> out;
  for (const auto& item : detail::split(schedule, ',')) {
    auto parts = detail::split(item, ':');
    if (parts.size() != 3) throw ConfigError("schedule entries are N:L:T, got '" + item + "'");
    out.push_back({detail::parse_count("schedule", parts[0]),
                   static_cast<std::size_t>(detail::parse_count("schedule", parts[1])),
                   step_budget(detail::parse_count("schedule", parts[2]))});
  }
  return out;
}

inline ScanCaps ExperimentConfig::make_caps() const {
  if (budget == 0 || theta_budget == 0) throw ConfigError("step budgets must be at least 1");
  ScanCaps caps;
  caps.attempts = attempts;
  caps.budget = StepBudget{budget};
  caps.theta_budget = StepBudget{theta_budget};
  caps.cutoff = cutoff;
  caps.horizon = horizon;
  caps.pad = pad;
  if (source == "doubling") caps.source = TargetSource::Doubling;
  else if (source == "busy_beaver") caps.source = TargetSource::BusyBeaver;
  else throw ConfigError("unknown source '" + source + "' (expected doubling or busy_beaver)");
  return caps;
}

}  // namespace eudiv
