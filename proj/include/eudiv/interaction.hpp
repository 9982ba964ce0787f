#pragma once

// Agent/environment loop: histories, policies, Gamma_q, truncated Psi and W_p.

#include "eudiv/errors.hpp"
#include "eudiv/minilang.hpp"

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace eudiv {

struct History {
  std::vector<Natural> actions;      // y_1 .. y_n
  std::vector<Natural> perceptions;  // x_1 .. x_n

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }

  void push(Natural y, Natural x) {
    actions.push_back(std::move(y));
    perceptions.push_back(std::move(x));
  }

  void validate(const Alphabets& a) const {
    if (actions.size() != perceptions.size())
      throw ConfigError("history rows differ in length: " + std::to_string(actions.size()) + " actions, " +
                        std::to_string(perceptions.size()) + " perceptions");
    a.check_actions(actions);
    for (std::size_t i = 0; i < perceptions.size(); ++i)
      if (!a.valid_perception(perceptions[i]))
        throw ConfigError("perception " + perceptions[i].get_str() + " at position " + std::to_string(i + 1) +
                          " is outside X");
  }

  friend bool operator==(const History&, const History&) = default;
};

/// Reads two whitespace-separated integer rows: actions, then perceptions.
/// Lines starting with '#' are skipped; an empty file is the empty history.
inline History read_history(std::istream& in) {
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] == '#') continue;
    rows.push_back(line);
  }
  while (!rows.empty() && rows.back().find_first_not_of(" \t\r") == std::string::npos) rows.pop_back();
  if (rows.size() > 2) throw ConfigError("history file must have exactly two rows");
  rows.resize(2);

  auto parse_row = [](const std::string& row, const char* what) {
    std::vector<Natural> out;
    std::istringstream words(row);
    std::string w;
    while (words >> w) {
      try {
        out.push_back(parse_natural(w));
      } catch (const std::invalid_argument&) {
        throw ConfigError(std::string("bad ") + what + " symbol '" + w + "'");
      }
    }
    return out;
  };
  History h{parse_row(rows[0], "action"), parse_row(rows[1], "perception")};
  if (h.actions.size() != h.perceptions.size()) throw ConfigError("history rows differ in length");
  return h;
}

inline void write_history(std::ostream& out, const History& h) {
  auto row = [&](const std::vector<Natural>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i].get_str();
    out << '\n';
  };
  row(h.actions);
  row(h.perceptions);
}

struct ConstantAction {
  Natural action = 0;
};

// Plays the script, then repeats its last entry (0 for an empty script).
struct ScriptedActions {
  std::vector<Natural> script;
};

// Runs a program on (y_1, x_1, ..., y_{k-1}, x_{k-1}); output mod |Y|.
struct ProgramPolicy {
  Program program;
  StepBudget budget{1000};
  Natural fallback = 0;
};

using Policy = std::variant<ConstantAction, ScriptedActions, ProgramPolicy>;

inline std::string describe(const Policy& p) {
  struct {
    std::string operator()(const ConstantAction& c) const { return "constant:" + c.action.get_str(); }
    std::string operator()(const ScriptedActions& s) const {
      std::string out = "scripted:";
      for (std::size_t i = 0; i < s.script.size(); ++i) out += (i ? "," : "") + s.script[i].get_str();
      return out;
    }
    std::string operator()(const ProgramPolicy& p) const { return "program:" + encode(p.program).get_str(); }
  } visitor;
  return std::visit(visitor, p);
}

/// Next action given the history so far.
inline Natural act(const Policy& policy, const History& h, const Alphabets& a) {
  struct {
    const History& h;
    const Alphabets& a;
    Natural operator()(const ConstantAction& c) const { return c.action; }
    Natural operator()(const ScriptedActions& s) const {
      if (s.script.empty()) return 0;
      return s.script[std::min(h.size(), s.script.size() - 1)];
    }
    Natural operator()(const ProgramPolicy& p) const {
      std::vector<Natural> interleaved;
      interleaved.reserve(2 * h.size());
      for (std::size_t i = 0; i < h.size(); ++i) {
        interleaved.push_back(h.actions[i]);
        interleaved.push_back(h.perceptions[i]);
      }
      Outcome o = run(p.program, interleaved, p.budget);
      if (!o.halted()) return p.fallback;
      Natural y = o.value;
      mpz_fdiv_r_ui(y.get_mpz_t(), y.get_mpz_t(), a.action_size);
      return y;
    }
  } visitor{h, a};
  Natural y = std::visit(visitor, policy);
  if (!a.valid_action(y)) throw ConfigError("policy produced action " + y.get_str() + " outside Y");
  return y;
}

struct GammaResult {
  std::vector<Natural> perceptions;
  std::optional<std::size_t> unknown_at;  // first prefix length that ran out of budget
  bool divergent = false;                 // that prefix provably never halts

  bool complete() const { return !unknown_at.has_value(); }
};

/// (q(s_1^1), ..., q(s_1^m)) for the longest m whose runs all halt.
inline GammaResult gamma(const Program& q, std::span<const Natural> actions, StepBudget budget,
                         const Alphabets& a) {
  a.check_actions(actions);
  GammaResult g;
  for (std::size_t k = 1; k <= actions.size(); ++k) {
    Outcome o = run(q, actions.first(k), budget);
    if (!o.halted()) {
      g.unknown_at = k;
      g.divergent = o.proven_divergent;
      return g;
    }
    g.perceptions.push_back(a.to_perception(std::move(o.value)));
  }
  return g;
}

struct RolloutResult {
  std::vector<Natural> perceptions;            // x_{n+1} .. x_{n+L'}
  std::optional<std::size_t> truncated_at;     // step k in 1..L where q ran out of budget

  bool complete() const { return !truncated_at.has_value(); }
};

/// First L symbols of Psi(q, p, y_1^n, x_1^n), or a truncation.
inline RolloutResult rollout_psi(const Program& q, const Policy& p, const History& h, std::size_t horizon,
                                 StepBudget budget, const Alphabets& a) {
  h.validate(a);
  {
    GammaResult g = gamma(q, h.actions, budget, a);
    if (!g.complete() || g.perceptions != h.perceptions)
      throw ConsistencyError("environment does not reproduce the history");
  }
  History cur = h;
  RolloutResult r;
  for (std::size_t k = 1; k <= horizon; ++k) {
    Natural y = act(p, cur, a);
    cur.actions.push_back(std::move(y));
    Outcome o = run(q, cur.actions, budget);
    if (!o.halted()) {
      r.truncated_at = k;
      return r;
    }
    Natural x = a.to_perception(std::move(o.value));
    r.perceptions.push_back(x);
    cur.perceptions.push_back(std::move(x));
  }
  return r;
}

/// x_1^n followed by the truncated future.
inline std::vector<Natural> w_p(const Program& q, const Policy& p, const History& h, std::size_t horizon,
                                StepBudget budget, const Alphabets& a) {
  RolloutResult r = rollout_psi(q, p, h, horizon, budget, a);
  std::vector<Natural> w = h.perceptions;
  w.insert(w.end(), r.perceptions.begin(), r.perceptions.end());
  return w;
}

}  // namespace eudiv
