#pragma once

// Budgeted busy-beaver lower bounds over the theta index, the environment
// synthesizer G, rho-bar and series-term bounds.

#include "eudiv/errors.hpp"
#include "eudiv/hypothesis.hpp"
#include "eudiv/interaction.hpp"
#include "eudiv/minilang.hpp"
#include "eudiv/parallel.hpp"
#include "eudiv/utility.hpp"

#include "json.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace eudiv {

// theta_k(0): program k run on the empty action string, raw numeric output.
inline std::optional<Natural> theta_value(const Natural& k, StepBudget budget) {
  Outcome o = run(decode(k), {}, budget);
  if (!o.halted()) return std::nullopt;
  return o.value;
}

struct BusyBeaverRow {
  std::uint64_t n = 0;
  std::optional<Natural> theta;  // theta_n(0) if it halted
  std::optional<Natural> bound;  // B_T(n)
  std::optional<std::uint64_t> argmax;  // smallest k <= n reaching B_T(n)
};

/// B_T(n) and u_n for every n in [0, n_max].
inline std::vector<BusyBeaverRow> busy_beaver_table(std::uint64_t n_max, StepBudget budget, unsigned threads = 1) {
  std::vector<BusyBeaverRow> rows(n_max + 1);
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    rows[k].n = k;
    rows[k].theta = theta_value(from_u64(k), budget);
  });
  std::optional<Natural> best;
  std::optional<std::uint64_t> arg;
  for (auto& row : rows) {
    if (row.theta && (!best || *row.theta > *best)) {
      best = row.theta;
      arg = row.n;
    }
    row.bound = best;
    row.argmax = arg;
  }
  return rows;
}

/// max_{k <= n} theta_k(0) over runs halting within the budget.
inline std::optional<Natural> busy_beaver_lb(std::uint64_t n, StepBudget budget, unsigned threads = 1) {
  return busy_beaver_table(n, budget, threads).back().bound;
}

/// Smallest k <= j with theta_k(0) = B_T(j).
inline std::uint64_t argmax_u(std::uint64_t j, StepBudget budget, unsigned threads = 1) {
  auto row = busy_beaver_table(j, budget, threads).back();
  if (!row.argmax) throw NoHaltingWitness("no theta_k with k <= " + std::to_string(j) + " halts within budget");
  return *row.argmax;
}

struct SynthesizedEnv {
  Program program;
  Natural index;
  std::vector<Natural> prefix;  // the replayed high-utility prefix (literal form only)
};

// G from a literal target: s = H(v) over D(h), then replay s and pad with c.
inline SynthesizedEnv synthesize_G(const Natural& v, const History& h, const UtilitySpec& spec, const Natural& pad,
                                   std::uint64_t cap, const Alphabets& a) {
  h.validate(a);
  if (!a.valid_perception(pad)) throw ConfigError("padding symbol is outside X");
  HeavenResult hr = heaven_finder(spec, h.perceptions, v, cap, a);
  if (!hr.prefix) throw Exhausted("heaven finder exhausted " + std::to_string(cap) + " cells for target " + v.get_str());
  SynthesizedEnv env;
  env.program = pad_to_sequence_program(*hr.prefix, pad);
  env.index = encode(env.program);
  env.prefix = std::move(*hr.prefix);
  return env;
}

// G from a theta program: the environment replays h, then runs the generator
// to obtain v = theta(0) and emits H(v) symbol by symbol via the spec's
// runtime template. Its index grows with the generator's, not with v.
inline SynthesizedEnv synthesize_G_from_theta(const Program& theta, const History& h, const UtilitySpec& spec,
                                              const Natural& pad, Direction dir, const Alphabets& a) {
  h.validate(a);
  spec.check_mode(a);
  if (!a.valid_perception(pad)) throw ConfigError("padding symbol is outside X");
  Assembler as;
  std::vector<Assembler::Label> rows;
  as.emit(Op::Len);
  for (std::size_t t = 1; t <= h.size(); ++t) {
    rows.push_back(as.new_label());
    as.emit(Op::Dup);
    as.emit(Op::Push, from_u64(t));
    as.emit(Op::Sub);
    as.jump(Op::Jz, rows.back());
  }
  if (!spec.emit_heaven(dir, h.perceptions, pad, theta, as))
    throw ConfigError(spec.name() + " has no runtime heaven template for direction " + to_string(dir) +
                      " after this history");
  for (std::size_t t = 0; t < h.size(); ++t) {
    as.bind(rows[t]);
    as.emit(Op::Push, h.perceptions[t]);
    as.emit(Op::Halt);
  }
  SynthesizedEnv env;
  env.program = as.finish();
  env.index = encode(env.program);
  return env;
}

/// ceil(max_{k <= j} 1 / rho(G(k))).
inline Natural rho_bar(std::size_t j, std::span<const Natural> g_trace, const Prior& prior) {
  if (g_trace.size() < j + 1) throw std::invalid_argument("rho_bar: trace shorter than j + 1");
  Natural best = 0;
  for (std::size_t k = 0; k <= j; ++k) {
    Rational inv = 1 / prior.weight(g_trace[k]);
    Natural c = ceil(inv);
    if (c > best) best = c;
  }
  return best;
}

struct TermBound {
  ExtRational utility;      // U_L (above) or U_U (below) of the W_p prefix
  Rational posterior_lower;
  ExtRational term;         // utility * posterior_lower
  std::vector<Natural> w;   // the W_p prefix used
};

namespace detail {

inline Rational posterior_lower_for(const Natural& env_index, const Program& env, const History& h,
                                    const PosteriorTable& table, StepBudget budget, const Alphabets& a) {
  if (env_index <= from_u64(table.cutoff())) {
    const auto& e = table.at(env_index.get_ui());
    if (!e.cls.consistent())
      throw DomainError("environment " + env_index.get_str() + " is " + e.cls.str() + " in the posterior table");
  } else {
    Classification c = classify(env, h, budget, a);
    if (!c.consistent())
      throw DomainError("environment " + env_index.get_str() + " is " + c.str() + " at the synthesis budget");
  }
  return table.posterior_lower(table.prior().weight(env_index));
}

}  // namespace detail

// Bound on the series term U(W_p(q)) * P({q} | data). Above: a lower bound
// (sound when U_L >= 0). Below: U_U * posterior-lower, an upper bound when U_U <= 0.
inline TermBound term_bound(const Natural& env_index, const Policy& p, const History& h, const UtilitySpec& spec,
                            const PosteriorTable& table, std::size_t horizon, StepBudget budget, const Alphabets& a,
                            Direction dir = Direction::Above) {
  const Program env = decode(env_index);
  TermBound tb;
  tb.posterior_lower = detail::posterior_lower_for(env_index, env, h, table, budget, a);
  tb.w = w_p(env, p, h, horizon, budget, a);
  tb.utility = dir == Direction::Above ? u_lower(spec, tb.w, a) : u_upper(spec, tb.w, a);
  tb.term = tb.utility.scaled(tb.posterior_lower);
  return tb;
}

inline ExtRational term_magnitude(const Natural& env_index, const Policy& p, const History& h,
                                  const UtilitySpec& spec, const PosteriorTable& table, std::size_t horizon,
                                  StepBudget budget, const Alphabets& a) {
  return term_bound(env_index, p, h, spec, table, horizon, budget, a).term;
}

struct WitnessRecord {
  Natural j;          // scan position; u_j <= j
  Natural u_j;        // theta index of the generator
  std::uint64_t attempt = 0;  // 0-based attempt number within the scan direction
  Natural v;          // theta_{u_j}(0)
  Natural env_index;
  Direction direction = Direction::Above;
  ExtRational utility;  // U_L (above) / U_U (below) of the W_p prefix
  Rational posterior_lower;
  ExtRational term;     // term_lower (above) / term_upper (below)
  Natural rho_bar;      // running ceil(max 1/rho(G(k))) over the scan so far
};

inline nlohmann::ordered_json to_json(const WitnessRecord& r) {
  nlohmann::ordered_json j;
  j["j"] = r.j.get_str();
  j["u_j"] = r.u_j.get_str();
  j["attempt"] = r.attempt;
  j["v"] = r.v.get_str();
  j["env_index"] = r.env_index.get_str();
  j["direction"] = to_string(r.direction);
  j[r.direction == Direction::Above ? "term_lower" : "term_upper"] = r.term.str();
  j["utility_bound"] = r.utility.str();
  j["posterior_lower"] = to_fraction(r.posterior_lower);
  j["rho_bar"] = r.rho_bar.get_str();
  return j;
}

/// One JSON object per line.
inline void write_jsonl(std::ostream& out, std::span<const WitnessRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace eudiv
