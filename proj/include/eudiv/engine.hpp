#pragma once

// Conditional expected utility as certified intervals, divergence scans for
// unbounded utilities, convergence reports for bounded ones, and policy
// comparison by interval dominance.

#include "eudiv/errors.hpp"
#include "eudiv/hypothesis.hpp"
#include "eudiv/interaction.hpp"
#include "eudiv/parallel.hpp"
#include "eudiv/utility.hpp"
#include "eudiv/witness.hpp"

#include "json.hpp"

#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace eudiv {

struct Context {
  Alphabets alphabets = Alphabets::finite(2, 2);
  Prior prior = Prior::geometric();
  unsigned threads = 1;
};

struct EUInterval {
  ExtRational lower;
  ExtRational upper;
  Rational consistent_mass;
  Rational refuted_mass;
  Rational unknown_mass;
  Rational tail_mass;
  std::uint64_t cutoff = 0;
  std::size_t horizon = 0;
  StepBudget budget;
  std::size_t consistent_count = 0;
  std::size_t truncated_rollouts = 0;
  // Largest U_U - U_L over complete rollouts: the part of the gap owed to the horizon.
  std::optional<Rational> horizon_gap;
  // sum rho_i (U_U - U_L)_i / C over consistent programs, when finite.
  std::optional<Rational> weighted_rollout_gap;

  ExtRational gap() const { return upper - lower; }
};

inline nlohmann::ordered_json to_json(const EUInterval& iv) {
  nlohmann::ordered_json j;
  j["lower"] = iv.lower.str();
  j["upper"] = iv.upper.str();
  j["gap"] = (iv.lower.is_finite() && iv.upper.is_finite()) ? iv.gap().str() : std::string("+inf");
  j["cutoff"] = iv.cutoff;
  j["horizon"] = iv.horizon;
  j["budget"] = iv.budget.max_steps;
  j["consistent_mass"] = to_fraction(iv.consistent_mass);
  j["refuted_mass"] = to_fraction(iv.refuted_mass);
  j["unknown_mass"] = to_fraction(iv.unknown_mass);
  j["tail_mass"] = to_fraction(iv.tail_mass);
  j["consistent_count"] = iv.consistent_count;
  j["truncated_rollouts"] = iv.truncated_rollouts;
  j["horizon_gap"] = iv.horizon_gap ? to_fraction(*iv.horizon_gap) : std::string("none");
  j["weighted_rollout_gap"] = iv.weighted_rollout_gap ? to_fraction(*iv.weighted_rollout_gap) : std::string("+inf");
  return j;
}

// E(U(x_1^n Psi(Q, p, y_1^n, x_1^n)) | Gamma_Q(y_1^n) = x_1^n) is bracketed by
// the extremes of (A + R) / (C + M), where A sums rho_i * U-bound over
// consistent programs, C is their mass, M in [0, unknown + tail] is the
// unresolved mass that might also be consistent, and R in [M inf U, M sup U].
inline EUInterval expected_utility(const Policy& p, const History& h, const UtilitySpec& spec, std::uint64_t cutoff,
                                   std::size_t horizon, StepBudget budget, const Context& ctx) {
  const Alphabets& a = ctx.alphabets;
  spec.check_mode(a);
  PosteriorTable table = build_posterior(h, cutoff, budget, a, ctx.prior, ctx.threads);

  struct Slot {
    bool used = false;
    bool complete = false;
    ExtRational lo, hi;
  };
  std::vector<Slot> slots(table.entries().size());
  parallel_for(slots.size(), ctx.threads, [&](std::size_t i) {
    if (!table.entries()[i].cls.consistent()) return;
    RolloutResult r = rollout_psi(decode(static_cast<std::uint64_t>(i)), p, h, horizon, budget, a);
    std::vector<Natural> w = h.perceptions;
    w.insert(w.end(), r.perceptions.begin(), r.perceptions.end());
    slots[i] = {true, r.complete(), spec.lower(w), spec.upper(w)};
  });

  EUInterval iv;
  iv.cutoff = cutoff;
  iv.horizon = horizon;
  iv.budget = budget;
  iv.consistent_mass = table.consistent_mass();
  iv.refuted_mass = table.refuted_mass();
  iv.unknown_mass = table.unknown_mass();
  iv.tail_mass = table.tail_mass();

  ExtRational a_lo = 0L, a_hi = 0L;
  bool gaps_finite = true;
  Rational weighted_gap = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot& s = slots[i];
    if (!s.used) continue;
    const Rational& rho = table.entries()[i].rho;
    ++iv.consistent_count;
    if (!s.complete) ++iv.truncated_rollouts;
    a_lo = a_lo + s.lo.scaled(rho);
    a_hi = a_hi + s.hi.scaled(rho);
    if (s.lo.is_finite() && s.hi.is_finite()) {
      Rational g = s.hi.value() - s.lo.value();
      weighted_gap += rho * g;
      if (s.complete && (!iv.horizon_gap || g > *iv.horizon_gap)) iv.horizon_gap = g;
    } else {
      gaps_finite = false;
    }
  }
  if (gaps_finite) iv.weighted_rollout_gap = weighted_gap / iv.consistent_mass;

  const Rational& c = iv.consistent_mass;
  const Rational m = iv.unknown_mass + iv.tail_mass;
  const Rational inv_c = 1 / c;
  const Rational inv_cm = 1 / (c + m);
  iv.lower = min(a_lo.scaled(inv_c), (a_lo + spec.infimum().scaled(m)).scaled(inv_cm));
  iv.upper = max(a_hi.scaled(inv_c), (a_hi + spec.supremum().scaled(m)).scaled(inv_cm));
  return iv;
}

struct ScheduleStep {
  std::uint64_t cutoff = 0;
  std::size_t horizon = 0;
  StepBudget budget{1000};
};

struct ConvergenceReport {
  std::vector<ScheduleStep> schedule;
  std::vector<EUInterval> intervals;
  std::vector<Rational> gap_bounds;       // sum rho g / C + range * M / (C + M)
  std::vector<bool> gap_within_bound;
  bool lower_monotone = true;             // nondecreasing along the schedule
  bool upper_monotone = true;             // nonincreasing along the schedule
};

inline ConvergenceReport convergence_report(const Policy& p, const History& h, const UtilitySpec& spec,
                                            const std::vector<ScheduleStep>& schedule, const Context& ctx) {
  if (!spec.bounded()) throw ConfigError(spec.name() + " is unbounded; use a divergence scan instead");
  const Rational range = spec.supremum().value() - spec.infimum().value();
  ConvergenceReport rep;
  rep.schedule = schedule;
  for (const auto& step : schedule) {
    EUInterval iv = expected_utility(p, h, spec, step.cutoff, step.horizon, step.budget, ctx);
    const Rational m = iv.unknown_mass + iv.tail_mass;
    Rational bound = *iv.weighted_rollout_gap + range * m / (iv.consistent_mass + m);
    rep.gap_within_bound.push_back(iv.gap() <= ExtRational(bound));
    rep.gap_bounds.push_back(std::move(bound));
    if (!rep.intervals.empty()) {
      if (iv.lower < rep.intervals.back().lower) rep.lower_monotone = false;
      if (iv.upper > rep.intervals.back().upper) rep.upper_monotone = false;
    }
    rep.intervals.push_back(std::move(iv));
  }
  return rep;
}

inline void write_schedule_csv(std::ostream& out, const ConvergenceReport& rep) {
  out << "step,cutoff,horizon,budget,lower,upper,gap,horizon_gap,weighted_rollout_gap,unknown_mass,tail_mass,"
         "gap_bound,gap_within_bound\n";
  for (std::size_t k = 0; k < rep.intervals.size(); ++k) {
    const auto& iv = rep.intervals[k];
    out << k << ',' << iv.cutoff << ',' << iv.horizon << ',' << iv.budget.max_steps << ',' << iv.lower.str() << ','
        << iv.upper.str() << ',' << iv.gap().str() << ','
        << (iv.horizon_gap ? to_fraction(*iv.horizon_gap) : std::string("none")) << ','
        << to_fraction(*iv.weighted_rollout_gap) << ',' << to_fraction(iv.unknown_mass) << ','
        << to_fraction(iv.tail_mass) << ',' << to_fraction(rep.gap_bounds[k]) << ','
        << (rep.gap_within_bound[k] ? "true" : "false") << '\n';
  }
}

inline nlohmann::ordered_json to_json(const ConvergenceReport& rep) {
  nlohmann::ordered_json j;
  j["lower_monotone"] = rep.lower_monotone;
  j["upper_monotone"] = rep.upper_monotone;
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < rep.intervals.size(); ++k) {
    auto e = to_json(rep.intervals[k]);
    e["gap_bound"] = to_fraction(rep.gap_bounds[k]);
    e["gap_within_bound"] = static_cast<bool>(rep.gap_within_bound[k]);
    arr.push_back(std::move(e));
  }
  j["intervals"] = std::move(arr);
  return j;
}

struct PolicyComparison {
  std::vector<EUInterval> intervals;
  std::vector<std::vector<bool>> dominates;  // [a][b]: lower(a) > upper(b)
};

inline PolicyComparison compare_policies(const std::vector<Policy>& policies, const History& h,
                                         const UtilitySpec& spec, std::uint64_t cutoff, std::size_t horizon,
                                         StepBudget budget, const Context& ctx) {
  if (!spec.bounded()) throw ConfigError("policy comparison needs a bounded utility");
  PolicyComparison cmp;
  for (const auto& p : policies) cmp.intervals.push_back(expected_utility(p, h, spec, cutoff, horizon, budget, ctx));
  const std::size_t n = policies.size();
  cmp.dominates.assign(n, std::vector<bool>(n, false));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) cmp.dominates[x][y] = cmp.intervals[x].lower > cmp.intervals[y].upper;
  return cmp;
}

// ---------------------------------------------------------------------------
// Divergence scans.

enum class TargetSource { Doubling, BusyBeaver };

enum class ScanDirection { Above, Below, Both };

inline ScanDirection parse_scan_direction(const std::string& s) {
  if (s == "above") return ScanDirection::Above;
  if (s == "below") return ScanDirection::Below;
  if (s == "both") return ScanDirection::Both;
  throw ConfigError("unknown direction '" + s + "' (expected above, below or both)");
}

inline std::string to_string(ScanDirection d) {
  return d == ScanDirection::Above ? "above" : d == ScanDirection::Below ? "below" : "both";
}

struct ScanCaps {
  std::uint64_t attempts = 64;      // generator programs tried per direction
  StepBudget budget{100000};        // environment runs
  StepBudget theta_budget{10000};   // generator runs
  std::uint64_t cutoff = 64;        // enumerated posterior table
  std::size_t horizon = 1;
  TargetSource source = TargetSource::Doubling;
  Natural pad = 0;
};

struct DivergenceReport {
  std::string utility;
  std::string prior;
  ScanDirection direction = ScanDirection::Above;
  std::size_t target = 0;
  bool complete = true;
  std::uint64_t attempts_used = 0;
  std::vector<WitnessRecord> records;
  std::vector<ExtRational> partial_sums;  // running sum of record terms

  std::size_t count(Direction d) const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.direction == d;
    return n;
  }
};

/// The generator `push 2; push e; pow; halt`, computing 2^e.
inline Program power_of_two_generator(const Natural& e) {
  return Program({{Op::Push, 2}, {Op::Push, e}, {Op::Pow, 0}, {Op::Halt, 0}});
}

namespace detail {

struct ScanState {
  const Policy& policy;
  const History& h;
  const UtilitySpec& spec;
  const PosteriorTable& table;
  const ScanCaps& caps;
  const Context& ctx;
  std::set<Natural> seen;
  Natural running_rho_bar = 0;
};

// One G application; returns a record when the term bound clears +-1.
// j is the scan position the generator stands for: its own theta index for
// the doubling source, the record position for the busy-beaver source.
inline std::optional<WitnessRecord> try_generator(ScanState& st, const Program& theta, const Natural& j,
                                                  std::uint64_t attempt, Direction dir) {
  const Alphabets& a = st.ctx.alphabets;
  Outcome o = run(theta, {}, st.caps.theta_budget);
  if (!o.halted()) return std::nullopt;

  SynthesizedEnv env = synthesize_G_from_theta(theta, st.h, st.spec, st.caps.pad, dir, a);
  if (st.seen.count(env.index)) return std::nullopt;

  try {
    Natural inv = ceil(1 / st.table.prior().weight(env.index));
    if (inv > st.running_rho_bar) st.running_rho_bar = inv;
  } catch (const std::overflow_error&) {
    return std::nullopt;  // weight of this index is not representable
  }

  TermBound tb;
  try {
    tb = term_bound(env.index, st.policy, st.h, st.spec, st.table, st.caps.horizon, st.caps.budget, a, dir);
  } catch (const DomainError&) {
    return std::nullopt;  // not consistent within the environment budget
  }
  const ExtRational v = Rational(o.value);
  if (dir == Direction::Above ? !(tb.utility >= v) : !(tb.utility <= -v)) return std::nullopt;
  const bool hit = dir == Direction::Above ? tb.term >= ExtRational(1L) : tb.term <= ExtRational(-1L);
  if (!hit) return std::nullopt;

  st.seen.insert(env.index);
  WitnessRecord r;
  r.j = j;
  r.u_j = encode(theta);
  r.attempt = attempt;
  r.v = o.value;
  r.env_index = env.index;
  r.direction = dir;
  r.utility = tb.utility;
  r.posterior_lower = tb.posterior_lower;
  r.term = tb.term;
  r.rho_bar = st.running_rho_bar;
  return r;
}

inline std::uint64_t scan_direction(ScanState& st, std::size_t target, Direction dir,
                                    std::vector<WitnessRecord>& out) {
  std::size_t found = 0;
  std::uint64_t attempts = 0;
  if (st.caps.source == TargetSource::Doubling) {
    // Exponent doubles until the first hit, then v = 2^e doubles per attempt.
    Natural e = 1;
    bool hit_once = false;
    while (found < target && attempts < st.caps.attempts) {
      Program theta = power_of_two_generator(e);
      auto rec = try_generator(st, theta, encode(theta), attempts, dir);
      ++attempts;
      if (rec) {
        out.push_back(std::move(*rec));
        ++found;
        hit_once = true;
      }
      if (hit_once) e += 1; else e *= 2;
    }
  } else {
    // Record holders u_j of B_T(j), j = 0, 1, 2, ...
    std::optional<Natural> best;
    for (std::uint64_t k = 0; found < target && k < st.caps.attempts; ++k) {
      ++attempts;
      auto v = theta_value(from_u64(k), st.caps.theta_budget);
      if (!v || (best && *v <= *best)) continue;
      best = v;
      auto rec = try_generator(st, decode(k), from_u64(k), k, dir);
      if (rec) {
        out.push_back(std::move(*rec));
        ++found;
      }
    }
  }
  return attempts;
}

}  // namespace detail

inline DivergenceReport divergence_scan(const Policy& p, const History& h, const UtilitySpec& spec,
                                        std::size_t target, const ScanCaps& caps, ScanDirection direction,
                                        const Context& ctx) {
  const Alphabets& a = ctx.alphabets;
  spec.check_mode(a);
  h.validate(a);
  if (direction != ScanDirection::Below && !spec.unbounded_above())
    throw ConfigError(spec.name() + " is not unbounded above");
  if (direction != ScanDirection::Above && !spec.unbounded_below())
    throw ConfigError(spec.name() + " is not unbounded below");

  DivergenceReport rep;
  rep.utility = spec.name();
  rep.prior = ctx.prior.name();
  rep.direction = direction;
  rep.target = target;
  if (target == 0) return rep;

  PosteriorTable table = build_posterior(h, caps.cutoff, caps.budget, a, ctx.prior, ctx.threads);
  detail::ScanState st{p, h, spec, table, caps, ctx, {}, 0};

  std::size_t wanted = 0;
  if (direction != ScanDirection::Below) {
    rep.attempts_used += detail::scan_direction(st, target, Direction::Above, rep.records);
    wanted += target;
  }
  if (direction != ScanDirection::Above) {
    rep.attempts_used += detail::scan_direction(st, target, Direction::Below, rep.records);
    wanted += target;
  }
  rep.complete = rep.records.size() == wanted;

  ExtRational sum = 0L;
  for (const auto& r : rep.records) {
    sum = sum + r.term;
    rep.partial_sums.push_back(sum);
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const DivergenceReport& rep) {
  nlohmann::ordered_json j;
  j["utility"] = rep.utility;
  j["prior"] = rep.prior;
  j["direction"] = to_string(rep.direction);
  j["target"] = rep.target;
  j["complete"] = rep.complete;
  j["attempts_used"] = rep.attempts_used;
  j["count_above"] = rep.count(Direction::Above);
  j["count_below"] = rep.count(Direction::Below);
  auto recs = nlohmann::ordered_json::array();
  for (const auto& r : rep.records) recs.push_back(to_json(r));
  j["records"] = std::move(recs);
  auto sums = nlohmann::ordered_json::array();
  for (const auto& s : rep.partial_sums) sums.push_back(s.str());
  j["partial_sums"] = std::move(sums);
  return j;
}

}  // namespace eudiv
