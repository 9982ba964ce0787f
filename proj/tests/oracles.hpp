#pragma once

// Independent reference implementations used as test oracles, plus random
// generators shared by the unit tests and the acceptance runner.

#include "eudiv/eudiv.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using eudiv::Natural;
using eudiv::Rational;

// Cantor pairing written straight from the formula.
inline Natural cantor(const Natural& k1, const Natural& k2) {
  Natural s = k1 + k2;
  return s * (s + 1) / 2 + k2;
}

// Naive interaction loop: environment run on every full action prefix, the
// policy evaluated from scratch at each step.
struct LoopResult {
  std::vector<Natural> perceptions;  // history perceptions followed by the future
  std::optional<std::size_t> truncated_at;
};

inline Natural policy_action(const eudiv::Policy& policy, const std::vector<Natural>& ys,
                             const std::vector<Natural>& xs, const eudiv::Alphabets& a) {
  if (auto* c = std::get_if<eudiv::ConstantAction>(&policy)) return c->action;
  if (auto* s = std::get_if<eudiv::ScriptedActions>(&policy)) {
    if (s->script.empty()) return 0;
    std::size_t k = ys.size();
    return k < s->script.size() ? s->script[k] : s->script.back();
  }
  const auto& p = std::get<eudiv::ProgramPolicy>(policy);
  std::vector<Natural> input;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    input.push_back(ys[i]);
    input.push_back(xs[i]);
  }
  auto o = eudiv::run(p.program, input, p.budget);
  if (!o.halted()) return p.fallback;
  Natural r = o.value % Natural(static_cast<unsigned long>(a.action_size));
  return r;
}

inline LoopResult naive_loop(const eudiv::Program& q, const eudiv::Policy& policy, const eudiv::History& h,
                             std::size_t horizon, eudiv::StepBudget budget, const eudiv::Alphabets& a) {
  std::vector<Natural> ys = h.actions;
  std::vector<Natural> xs = h.perceptions;
  LoopResult r;
  for (std::size_t k = 1; k <= horizon; ++k) {
    ys.push_back(policy_action(policy, ys, xs, a));
    auto o = eudiv::run(q, ys, budget);
    if (!o.halted()) {
      r.truncated_at = k;
      break;
    }
    Natural x = o.value;
    if (a.perception_size) x = x % Natural(static_cast<unsigned long>(*a.perception_size));
    xs.push_back(x);
  }
  r.perceptions = xs;
  return r;
}

// B_T(n) by a direct loop.
inline std::optional<Natural> busy_beaver_direct(std::uint64_t n, eudiv::StepBudget budget) {
  std::optional<Natural> best;
  for (std::uint64_t k = 0; k <= n; ++k) {
    auto o = eudiv::run(eudiv::decode(k), std::vector<Natural>{}, budget);
    if (o.halted() && (!best || o.value > *best)) best = o.value;
  }
  return best;
}

// Sum of 2^-i for i = 0..n as (2^(n+1) - 1) / 2^n.
inline Rational geometric_partial_sum(std::uint64_t n) {
  Natural num, den;
  mpz_ui_pow_ui(num.get_mpz_t(), 2, n + 1);
  num -= 1;
  mpz_ui_pow_ui(den.get_mpz_t(), 2, n);
  Rational r(num, den);
  r.canonicalize();
  return r;
}

// Random well-formed programs with small operands and in-range jumps.
inline eudiv::Program random_program(std::mt19937_64& rng, std::size_t max_len, unsigned max_operand = 40) {
  std::uniform_int_distribution<std::size_t> len_d(0, max_len);
  std::uniform_int_distribution<unsigned> op_d(0, eudiv::kOpCount - 1);
  std::uniform_int_distribution<unsigned> arg_d(0, max_operand);
  const std::size_t len = len_d(rng);
  std::vector<eudiv::Instruction> code;
  for (std::size_t i = 0; i < len; ++i) {
    eudiv::Instruction ins{static_cast<eudiv::Op>(op_d(rng)), 0};
    if (eudiv::is_jump(ins.op)) ins.arg = std::uniform_int_distribution<std::size_t>(0, len)(rng);
    else if (eudiv::has_operand(ins.op)) ins.arg = arg_d(rng);
    code.push_back(std::move(ins));
  }
  return eudiv::Program(std::move(code));
}

// Programs drawn from a pool of environment shapes that read their input,
// mixed with raw random programs.
inline eudiv::Program random_environment(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> shape(0, 5);
  std::uniform_int_distribution<unsigned> small(0, 5);
  using eudiv::Op;
  switch (shape(rng)) {
    case 0: return eudiv::Program({{Op::Push, small(rng)}, {Op::Halt, 0}});            // constant
    case 1: return eudiv::Program({{Op::Last, 0}, {Op::Halt, 0}});                     // echo
    case 2: return eudiv::Program({{Op::Len, 0}, {Op::Push, small(rng)}, {Op::Add, 0}, {Op::Halt, 0}});
    case 3:  // diverges once the input is longer than a threshold
      return eudiv::Program({{Op::Len, 0}, {Op::Push, small(rng) + 1}, {Op::Sub, 0}, {Op::Jz, 5}, {Op::Jmp, 4},
                             {Op::Last, 0}, {Op::Halt, 0}});
    case 4:  // sum of actions, a loop whose length grows with the input
      return eudiv::Program({{Op::Push, 0}, {Op::Len, 0}, {Op::Dup, 0}, {Op::Jz, 12}, {Op::Swap, 0}, {Op::Read, 0},
                             {Op::Add, 0}, {Op::Next, 0}, {Op::Swap, 0}, {Op::Push, 1}, {Op::Sub, 0}, {Op::Jmp, 2},
                             {Op::Drop, 0}, {Op::Halt, 0}});
    default: return random_program(rng, 12, 6);
  }
}

inline eudiv::Policy random_policy(std::mt19937_64& rng, const eudiv::Alphabets& a) {
  std::uniform_int_distribution<std::uint64_t> act(0, a.action_size - 1);
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: return eudiv::ConstantAction{act(rng)};
    case 1: {
      eudiv::ScriptedActions s;
      auto n = std::uniform_int_distribution<int>(0, 6)(rng);
      for (int i = 0; i < n; ++i) s.script.push_back(act(rng));
      return s;
    }
    default: {
      eudiv::ProgramPolicy p;
      p.program = random_program(rng, 8, 6);
      p.budget = eudiv::StepBudget{200};
      p.fallback = act(rng);
      return p;
    }
  }
}

}  // namespace oracle
