#pragma once

// A small deterministic stack machine whose programs are the environment
// hypotheses. Every natural number decodes to a program.
//
// Index codec: the index is read as a bijective base-16 digit string
// (least significant digit first). Each digit is an opcode; PUSH, JMP and
// JZ consume an operand written as little-endian octal chunks, where a digit
// >= 8 means "more chunks follow". A stream that ends mid-operand simply ends
// the operand. Jump targets are reduced modulo (program size + 1); target ==
// size is the end of the program, where the machine idles forever.

#include "eudiv/numeric.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eudiv {

enum class Op : std::uint8_t {
  Halt = 0,
  Push,
  Dup,
  Swap,
  Drop,
  Over,
  Add,
  Sub,  // truncated at zero
  Mul,
  Pow,
  Len,   // push length of the input string
  Read,  // push input[cursor], 0 past the end
  Next,  // advance cursor (saturating)
  Jmp,
  Jz,    // pop; jump if zero
  Last,  // push the last input symbol, 0 if input is empty
};

inline constexpr unsigned kOpCount = 16;

inline constexpr std::array<std::string_view, kOpCount> kMnemonics = {
    "halt", "push", "dup", "swap", "drop", "over", "add", "sub",
    "mul",  "pow",  "len", "read", "next", "jmp",  "jz",  "last"};

inline constexpr bool has_operand(Op op) { return op == Op::Push || op == Op::Jmp || op == Op::Jz; }
inline constexpr bool is_jump(Op op) { return op == Op::Jmp || op == Op::Jz; }

struct Instruction {
  Op op = Op::Halt;
  Natural arg = 0;  // literal for push, absolute target for jumps

  friend bool operator==(const Instruction& a, const Instruction& b) {
    return a.op == b.op && a.arg == b.arg;
  }
};

class Program {
 public:
  Program() = default;

  /// Jump targets must already lie in [0, size].
  explicit Program(std::vector<Instruction> code) : code_(std::move(code)) {
    for (const auto& ins : code_) {
      if (is_jump(ins.op) && (ins.arg < 0 || ins.arg > static_cast<unsigned long>(code_.size())))
        throw std::invalid_argument("jump target out of range");
      if (ins.arg < 0) throw std::invalid_argument("negative operand");
    }
  }

  const std::vector<Instruction>& code() const { return code_; }
  std::size_t size() const { return code_.size(); }
  bool empty() const { return code_.empty(); }
  const Instruction& operator[](std::size_t i) const { return code_[i]; }

  friend bool operator==(const Program&, const Program&) = default;

  /// Canonical assembly: one instruction per line.
  std::string text() const {
    std::ostringstream out;
    for (const auto& ins : code_) {
      out << kMnemonics[static_cast<unsigned>(ins.op)];
      if (has_operand(ins.op)) out << ' ' << ins.arg.get_str();
      out << '\n';
    }
    return out.str();
  }

  // Structural totality certificate: every successor of every instruction is
  // strictly later and never the end of the program, so each run visits
  // strictly increasing addresses and must reach a HALT.
  bool loop_free_total() const {
    const std::size_t n = code_.size();
    if (n == 0) return false;
    for (std::size_t pc = 0; pc < n; ++pc) {
      const auto& ins = code_[pc];
      if (ins.op == Op::Halt) continue;
      if (is_jump(ins.op)) {
        unsigned long t = ins.arg.get_ui();
        if (t <= pc || t >= n) return false;
        if (ins.op == Op::Jmp) continue;
      }
      if (pc + 1 >= n) return false;
    }
    return true;
  }

 private:
  std::vector<Instruction> code_;
};

/// Parses the canonical text form. `#` starts a comment; blank lines are ignored.
inline Program parse_program(std::string_view text) {
  std::vector<Instruction> code;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string mnemonic;
    if (!(words >> mnemonic)) continue;
    auto it = std::find(kMnemonics.begin(), kMnemonics.end(), mnemonic);
    if (it == kMnemonics.end())
      throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown mnemonic '" + mnemonic + "'");
    Instruction ins{static_cast<Op>(it - kMnemonics.begin()), 0};
    std::string operand;
    if (has_operand(ins.op)) {
      if (!(words >> operand))
        throw std::invalid_argument("line " + std::to_string(line_no) + ": missing operand");
      try {
        ins.arg = parse_natural(operand);
      } catch (const std::invalid_argument&) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": bad operand '" + operand + "'");
      }
    }
    if (std::string extra; words >> extra)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": trailing text '" + extra + "'");
    code.push_back(std::move(ins));
  }
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (is_jump(code[i].op) && code[i].arg > static_cast<unsigned long>(code.size()))
      throw std::invalid_argument("instruction " + std::to_string(i) + ": jump target beyond program end");
  }
  return Program(std::move(code));
}

namespace detail {

inline std::vector<unsigned> index_digits(Natural i) {
  std::vector<unsigned> digits;
  while (i > 0) {
    i -= 1;
    digits.push_back(static_cast<unsigned>(mpz_fdiv_q_ui(i.get_mpz_t(), i.get_mpz_t(), kOpCount)));
  }
  return digits;
}

inline Natural digits_index(const std::vector<unsigned>& digits) {
  Natural i = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    i *= kOpCount;
    i += *it + 1;
  }
  return i;
}

}  // namespace detail

/// Total: every natural is a program index.
inline Program decode(const Natural& index) {
  if (index < 0) throw std::invalid_argument("program index must be a natural number");
  const auto digits = detail::index_digits(index);
  std::vector<Instruction> code;
  std::size_t pos = 0;
  while (pos < digits.size()) {
    Instruction ins{static_cast<Op>(digits[pos++]), 0};
    if (has_operand(ins.op)) {
      Natural value = 0;
      unsigned long shift = 0;
      while (pos < digits.size()) {
        unsigned d = digits[pos++];
        if (d & 7u) {
          Natural chunk = d & 7u;
          mpz_mul_2exp(chunk.get_mpz_t(), chunk.get_mpz_t(), shift);
          value += chunk;
        }
        shift += 3;
        if ((d & 8u) == 0) break;
      }
      ins.arg = std::move(value);
    }
    code.push_back(std::move(ins));
  }
  const unsigned long modulus = code.size() + 1;
  for (auto& ins : code) {
    if (is_jump(ins.op)) ins.arg = mpz_fdiv_ui(ins.arg.get_mpz_t(), modulus);
  }
  return Program(std::move(code));
}

inline Program decode(std::uint64_t index) { return decode(from_u64(index)); }

inline Natural encode(const Program& p) {
  std::vector<unsigned> digits;
  for (const auto& ins : p.code()) {
    digits.push_back(static_cast<unsigned>(ins.op));
    if (!has_operand(ins.op)) continue;
    Natural v = ins.arg;
    do {
      unsigned chunk = static_cast<unsigned>(mpz_fdiv_q_ui(v.get_mpz_t(), v.get_mpz_t(), 8));
      digits.push_back(chunk | (v != 0 ? 8u : 0u));
    } while (v != 0);
  }
  return detail::digits_index(digits);
}

struct StepBudget {
  std::uint64_t max_steps = 1;

  StepBudget() = default;
  explicit StepBudget(std::uint64_t n) : max_steps(n) {
    if (n < 1) throw std::invalid_argument("step budget must be at least 1");
  }
  friend bool operator==(const StepBudget&, const StepBudget&) = default;
};

// Action alphabet is always finite; perceptions are either finite or all of N.
struct Alphabets {
  std::uint64_t action_size = 2;
  std::optional<std::uint64_t> perception_size;  // nullopt: X = N

  static Alphabets finite(std::uint64_t actions, std::uint64_t perceptions) {
    Alphabets a{actions, perceptions};
    a.validate();
    return a;
  }
  static Alphabets naturals(std::uint64_t actions) {
    Alphabets a{actions, std::nullopt};
    a.validate();
    return a;
  }

  void validate() const {
    if (action_size < 2) throw std::invalid_argument("|Y| must be at least 2");
    if (perception_size && *perception_size < 2) throw std::invalid_argument("|X| must be at least 2");
  }

  bool naturals_mode() const { return !perception_size.has_value(); }

  bool valid_action(const Natural& a) const { return a >= 0 && a < from_u64(action_size); }
  bool valid_perception(const Natural& x) const {
    return x >= 0 && (!perception_size || x < from_u64(*perception_size));
  }

  Natural to_perception(Natural raw) const {
    if (perception_size) mpz_fdiv_r_ui(raw.get_mpz_t(), raw.get_mpz_t(), *perception_size);
    return raw;
  }

  void check_actions(std::span<const Natural> actions) const {
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (!valid_action(actions[i]))
        throw std::invalid_argument("action symbol " + actions[i].get_str() + " at position " +
                                    std::to_string(i + 1) + " is outside Y");
    }
  }
};

struct Outcome {
  enum class Status { Halted, OutOfBudget };

  Status status = Status::OutOfBudget;
  Natural value = 0;         // meaningful when halted
  std::uint64_t steps = 0;   // max_steps when out of budget
  bool proven_divergent = false;

  bool halted() const { return status == Status::Halted; }

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

// Values wider than this are treated as exhausting any budget.
inline constexpr std::uint64_t kMaxValueBits = std::uint64_t{1} << 28;

namespace detail {

struct MachineState {
  std::size_t pc = 0;
  std::size_t cursor = 0;
  std::vector<Natural> stack;

  bool same_as(const MachineState& o) const {
    if (pc != o.pc || cursor != o.cursor || stack.size() != o.stack.size()) return false;
    for (std::size_t i = stack.size(); i-- > 0;)
      if (stack[i] != o.stack[i]) return false;
    return true;
  }
};

inline std::uint64_t bit_length(const Natural& v) {
  return v == 0 ? 0 : mpz_sizeinbase(v.get_mpz_t(), 2);
}

}  // namespace detail

/// Executes `p` on `input` without alphabet checks; the output is the raw
/// natural on top of the stack at HALT.
inline Outcome run(const Program& p, std::span<const Natural> input, StepBudget budget) {
  using detail::bit_length;
  const std::size_t n = p.size();
  const std::uint64_t limit = budget.max_steps;

  detail::MachineState st;
  st.stack.reserve(16);
  std::uint64_t steps = 0;

  detail::MachineState snapshot;
  std::uint64_t next_snapshot = 1;

  auto out_of_budget = [&](bool divergent) {
    Outcome o;
    o.status = Outcome::Status::OutOfBudget;
    o.steps = limit;
    o.proven_divergent = divergent;
    return o;
  };
  auto pop = [&]() -> Natural {
    if (st.stack.empty()) return Natural(0);
    Natural v = std::move(st.stack.back());
    st.stack.pop_back();
    return v;
  };
  auto peek = [&](std::size_t depth) -> Natural {
    if (st.stack.size() <= depth) return Natural(0);
    return st.stack[st.stack.size() - 1 - depth];
  };

  while (true) {
    if (st.pc >= n) return out_of_budget(true);  // idles at end forever
    if (steps == next_snapshot) {
      snapshot = st;
      next_snapshot *= 2;
    } else if (steps > 1 && st.same_as(snapshot)) {
      return out_of_budget(true);
    }
    if (steps >= limit) return out_of_budget(false);

    const Instruction& ins = p[st.pc];
    std::uint64_t cost = 1;
    std::size_t next_pc = st.pc + 1;
    switch (ins.op) {
      case Op::Halt: {
        Outcome o;
        o.status = Outcome::Status::Halted;
        o.value = pop();
        o.steps = steps + 1;
        return o;
      }
      case Op::Push: st.stack.push_back(ins.arg); break;
      case Op::Dup: st.stack.push_back(peek(0)); break;
      case Op::Swap: {
        Natural b = pop();
        Natural a = pop();
        st.stack.push_back(std::move(b));
        st.stack.push_back(std::move(a));
        break;
      }
      case Op::Drop: pop(); break;
      case Op::Over: st.stack.push_back(peek(1)); break;
      case Op::Add: {
        Natural b = pop();
        Natural a = pop();
        a += b;
        if (bit_length(a) > kMaxValueBits) return out_of_budget(false);
        st.stack.push_back(std::move(a));
        break;
      }
      case Op::Sub: {
        Natural b = pop();
        Natural a = pop();
        if (a >= b) a -= b; else a = 0;
        st.stack.push_back(std::move(a));
        break;
      }
      case Op::Mul: {
        Natural b = pop();
        Natural a = pop();
        if (a != 0 && b != 0) {
          std::uint64_t min_bits = bit_length(a) + bit_length(b) - 1;
          if (min_bits > kMaxValueBits || steps + 1 + min_bits / 64 > limit) return out_of_budget(false);
        }
        a *= b;
        cost += bit_length(a) / 64;
        st.stack.push_back(std::move(a));
        break;
      }
      case Op::Pow: {
        Natural e = pop();
        Natural base = pop();
        Natural r;
        if (e == 0) {
          r = 1;
        } else if (base <= 1) {
          r = base;
        } else {
          if (!fits_u64(e) || e > from_u64(kMaxValueBits)) return out_of_budget(false);
          const std::uint64_t ex = to_u64(e);
          const std::uint64_t min_bits = ex * (bit_length(base) - 1) + 1;
          if (min_bits > kMaxValueBits || steps + 1 + min_bits / 64 > limit) return out_of_budget(false);
          mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), ex);
          if (bit_length(r) > kMaxValueBits) return out_of_budget(false);
        }
        cost += bit_length(r) / 64;
        st.stack.push_back(std::move(r));
        break;
      }
      case Op::Len: st.stack.push_back(from_u64(input.size())); break;
      case Op::Read:
        st.stack.push_back(st.cursor < input.size() ? input[st.cursor] : Natural(0));
        break;
      case Op::Next:
        if (st.cursor < input.size()) ++st.cursor;
        break;
      case Op::Jmp: next_pc = ins.arg.get_ui(); break;
      case Op::Jz:
        if (pop() == 0) next_pc = ins.arg.get_ui();
        break;
      case Op::Last: st.stack.push_back(input.empty() ? Natural(0) : input.back()); break;
    }
    if (steps + cost > limit) return out_of_budget(false);
    steps += cost;
    st.pc = next_pc;
  }
}

/// Environment run: validates the action string and maps the output into X.
inline Outcome run(const Program& p, std::span<const Natural> actions, StepBudget budget,
                   const Alphabets& alphabets) {
  alphabets.check_actions(actions);
  Outcome o = run(p, actions, budget);
  if (o.halted()) o.value = alphabets.to_perception(std::move(o.value));
  return o;
}

// Builds programs with symbolic labels; used by the synthesizers.
class Assembler {
 public:
  using Label = std::size_t;

  Label new_label() {
    bound_.push_back(kUnbound);
    return bound_.size() - 1;
  }

  void bind(Label l) { bound_.at(l) = code_.size(); }

  std::size_t here() const { return code_.size(); }

  void emit(Op op, Natural arg = 0) {
    if (is_jump(op)) throw std::logic_error("use jump() for jumps");
    code_.push_back({op, std::move(arg)});
  }

  void jump(Op op, Label target) {
    if (!is_jump(op)) throw std::logic_error("jump() needs jmp or jz");
    fixups_.push_back({code_.size(), target});
    code_.push_back({op, 0});
  }

  // Inlines a program as a subroutine computing one value: its HALT becomes
  // a jump past the block with the result left on top of the stack. The block
  // sees an empty input, as the program did when run on its own, and falling
  // off its end idles forever. Expects to be entered with an empty stack.
  void inline_value_program(const Program& gen) {
    const std::size_t base = code_.size();
    const std::size_t sentinel = base + gen.size();
    Label done = new_label();
    for (const auto& ins : gen.code()) {
      const std::size_t at = code_.size();
      switch (ins.op) {
        case Op::Halt: jump(Op::Jmp, done); break;
        case Op::Len:
        case Op::Read:
        case Op::Last: emit(Op::Push, 0); break;
        case Op::Next: code_.push_back({Op::Jmp, from_u64(at + 1)}); break;
        case Op::Jmp:
        case Op::Jz: code_.push_back({ins.op, from_u64(base + ins.arg.get_ui())}); break;
        default: code_.push_back(ins); break;
      }
    }
    code_.push_back({Op::Jmp, from_u64(sentinel)});
    bind(done);
  }

  Program finish() {
    for (auto [at, label] : fixups_) {
      if (bound_.at(label) == kUnbound) throw std::logic_error("unbound label");
      code_[at].arg = from_u64(bound_[label]);
    }
    fixups_.clear();
    return Program(code_);
  }

 private:
  static constexpr std::size_t kUnbound = static_cast<std::size_t>(-1);
  struct Fixup {
    std::size_t at;
    Label label;
  };
  std::vector<Instruction> code_;
  std::vector<std::size_t> bound_;
  std::vector<Fixup> fixups_;
};

}  // namespace eudiv
