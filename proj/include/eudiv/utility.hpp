#pragma once

// Utility functions over perception sequences, given by computable bound
// evaluators U_L <= U <= U_U on prefixes, and the heaven finder H.

#include "eudiv/dovetail.hpp"
#include "eudiv/errors.hpp"
#include "eudiv/minilang.hpp"
#include "eudiv/numeric.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eudiv {

enum class Direction { Above, Below };

inline Direction flip(Direction d) { return d == Direction::Above ? Direction::Below : Direction::Above; }

inline std::string to_string(Direction d) { return d == Direction::Above ? "above" : "below"; }

enum class ModeRequirement { Any, Naturals, Binary };

class UtilitySpec {
 public:
  virtual ~UtilitySpec() = default;

  virtual std::string name() const = 0;
  virtual ModeRequirement mode() const = 0;

  // Sound bounds on U over every admissible sequence extending s.
  virtual ExtRational lower(std::span<const Natural> s) const = 0;
  virtual ExtRational upper(std::span<const Natural> s) const = 0;

  virtual bool unbounded_above() const = 0;
  virtual bool unbounded_below() const = 0;
  bool bounded() const { return !unbounded_above() && !unbounded_below(); }

  // Global range of U.
  virtual ExtRational infimum() const = 0;
  virtual ExtRational supremum() const = 0;

  /// Guaranteed U_U - U_L after n observed symbols, for bounded specs.
  virtual std::optional<Rational> gap_bound(std::size_t /*n*/) const { return std::nullopt; }

  // Appends code that, entered right after the history-replay block with
  // k = |gamma| > |required| on the stack, computes v with `generator` and
  // emits symbol k of a prefix s extending `required` with U_L(s) >= v
  // (Above) or U_U(s) <= -v (Below), padding with `pad` after s. Returns
  // false when the spec has no such template for this direction/prefix.
  virtual bool emit_heaven(Direction, std::span<const Natural> /*required*/, const Natural& /*pad*/,
                           const Program& /*generator*/, Assembler&) const {
    return false;
  }

  void check_mode(const Alphabets& a) const {
    switch (mode()) {
      case ModeRequirement::Any: return;
      case ModeRequirement::Naturals:
        if (!a.naturals_mode()) throw ConfigError(name() + " requires perception mode naturals");
        return;
      case ModeRequirement::Binary:
        if (a.perception_size != std::optional<std::uint64_t>(2))
          throw ConfigError(name() + " requires perception mode finite with |X| = 2");
        return;
    }
  }
};

using UtilityPtr = std::shared_ptr<const UtilitySpec>;

inline ExtRational u_lower(const UtilitySpec& spec, std::span<const Natural> s, const Alphabets& a) {
  spec.check_mode(a);
  for (const auto& x : s)
    if (!a.valid_perception(x)) throw ConfigError("prefix symbol " + x.get_str() + " is outside X");
  return spec.lower(s);
}

inline ExtRational u_upper(const UtilitySpec& spec, std::span<const Natural> s, const Alphabets& a) {
  spec.check_mode(a);
  for (const auto& x : s)
    if (!a.valid_perception(x)) throw ConfigError("prefix symbol " + x.get_str() + " is outside X");
  return spec.upper(s);
}

// U(x) = sum_{k>=1} gamma^k min(x_k, 1).
class DiscountedReward final : public UtilitySpec {
 public:
  explicit DiscountedReward(Rational gamma) : gamma_(std::move(gamma)) {
    if (gamma_ <= 0 || gamma_ >= 1) throw ConfigError("discount must lie in (0, 1)");
  }

  const Rational& discount() const { return gamma_; }

  std::string name() const override { return "discounted(" + to_fraction(gamma_) + ")"; }
  ModeRequirement mode() const override { return ModeRequirement::Any; }

  ExtRational lower(std::span<const Natural> s) const override { return partial(s); }
  ExtRational upper(std::span<const Natural> s) const override { return Rational(partial(s) + *gap_bound(s.size())); }

  bool unbounded_above() const override { return false; }
  bool unbounded_below() const override { return false; }
  ExtRational infimum() const override { return 0L; }
  ExtRational supremum() const override { return Rational(gamma_ / (1 - gamma_)); }

  // gamma^{n+1} / (1 - gamma)
  std::optional<Rational> gap_bound(std::size_t n) const override { return power(n + 1) / (1 - gamma_); }

 private:
  Rational power(std::size_t k) const {
    Rational r;
    mpz_pow_ui(r.get_num_mpz_t(), gamma_.get_num_mpz_t(), k);
    mpz_pow_ui(r.get_den_mpz_t(), gamma_.get_den_mpz_t(), k);
    r.canonicalize();
    return r;
  }

  Rational partial(std::span<const Natural> s) const {
    Rational sum = 0;
    Rational g = gamma_;
    for (const auto& x : s) {
      if (x != 0) sum += g;
      g *= gamma_;
    }
    return sum;
  }

  Rational gamma_;
};

// U(x) = x_1 over X = N.
class FirstPerception final : public UtilitySpec {
 public:
  std::string name() const override { return "first"; }
  ModeRequirement mode() const override { return ModeRequirement::Naturals; }

  ExtRational lower(std::span<const Natural> s) const override {
    return s.empty() ? ExtRational::neg_inf() : ExtRational(Rational(s[0]));
  }
  ExtRational upper(std::span<const Natural> s) const override {
    return s.empty() ? ExtRational::pos_inf() : ExtRational(Rational(s[0]));
  }

  bool unbounded_above() const override { return true; }
  bool unbounded_below() const override { return false; }
  ExtRational infimum() const override { return 0L; }
  ExtRational supremum() const override { return ExtRational::pos_inf(); }

  bool emit_heaven(Direction dir, std::span<const Natural> required, const Natural& pad, const Program& gen,
                   Assembler& as) const override {
    if (dir != Direction::Above || !required.empty()) return false;
    // k == 1 ? v : pad
    auto emit = as.new_label();
    as.emit(Op::Drop);
    as.emit(Op::Len);
    as.emit(Op::Push, 1);
    as.emit(Op::Sub);
    as.jump(Op::Jz, emit);
    as.emit(Op::Push, pad);
    as.emit(Op::Halt);
    as.bind(emit);
    as.inline_value_program(gen);
    as.emit(Op::Halt);
    return true;
  }
};

// Over X = {0, 1}, on sequences containing a 0: number of 1s before the first 0.
class OnesRunLength final : public UtilitySpec {
 public:
  std::string name() const override { return "ones"; }
  ModeRequirement mode() const override { return ModeRequirement::Binary; }

  ExtRational lower(std::span<const Natural> s) const override { return Rational(from_u64(leading_ones(s))); }
  ExtRational upper(std::span<const Natural> s) const override {
    const std::size_t ones = leading_ones(s);
    if (ones == s.size()) return ExtRational::pos_inf();
    return Rational(from_u64(ones));
  }

  bool unbounded_above() const override { return true; }
  bool unbounded_below() const override { return false; }
  ExtRational infimum() const override { return 0L; }
  ExtRational supremum() const override { return ExtRational::pos_inf(); }

  bool emit_heaven(Direction dir, std::span<const Natural> required, const Natural& pad, const Program& gen,
                   Assembler& as) const override {
    if (dir != Direction::Above || leading_ones(required) != required.size()) return false;
    // k <= v ? 1 : pad
    auto one = as.new_label();
    as.emit(Op::Drop);
    as.inline_value_program(gen);
    as.emit(Op::Len);
    as.emit(Op::Swap);
    as.emit(Op::Sub);
    as.jump(Op::Jz, one);
    as.emit(Op::Push, pad);
    as.emit(Op::Halt);
    as.bind(one);
    as.emit(Op::Push, 1);
    as.emit(Op::Halt);
    return true;
  }

 private:
  static std::size_t leading_ones(std::span<const Natural> s) {
    std::size_t n = 0;
    while (n < s.size() && s[n] == 1) ++n;
    return n;
  }
};

// U(x) = zigzag(x_1): 0, 1, 2, 3, 4, ... -> 0, -1, 1, -2, 2, ...
class SignedFirstPerception final : public UtilitySpec {
 public:
  std::string name() const override { return "signed_first"; }
  ModeRequirement mode() const override { return ModeRequirement::Naturals; }

  static Integer zigzag(const Natural& x) {
    Integer half = x / 2;
    return mpz_odd_p(x.get_mpz_t()) ? Integer(-half - 1) : half;
  }

  ExtRational lower(std::span<const Natural> s) const override {
    return s.empty() ? ExtRational::neg_inf() : ExtRational(Rational(zigzag(s[0])));
  }
  ExtRational upper(std::span<const Natural> s) const override {
    return s.empty() ? ExtRational::pos_inf() : ExtRational(Rational(zigzag(s[0])));
  }

  bool unbounded_above() const override { return true; }
  bool unbounded_below() const override { return true; }
  ExtRational infimum() const override { return ExtRational::neg_inf(); }
  ExtRational supremum() const override { return ExtRational::pos_inf(); }

  bool emit_heaven(Direction dir, std::span<const Natural> required, const Natural& pad, const Program& gen,
                   Assembler& as) const override {
    if (!required.empty()) return false;
    // k == 1 ? (2v or 2v + 1) : pad
    auto emit = as.new_label();
    as.emit(Op::Drop);
    as.emit(Op::Len);
    as.emit(Op::Push, 1);
    as.emit(Op::Sub);
    as.jump(Op::Jz, emit);
    as.emit(Op::Push, pad);
    as.emit(Op::Halt);
    as.bind(emit);
    as.inline_value_program(gen);
    as.emit(Op::Push, 2);
    as.emit(Op::Mul);
    if (dir == Direction::Below) {
      as.emit(Op::Push, 1);
      as.emit(Op::Add);
    }
    as.emit(Op::Halt);
    return true;
  }
};

// U' = -U.
class Negated final : public UtilitySpec {
 public:
  explicit Negated(UtilityPtr inner) : inner_(std::move(inner)) {
    if (!inner_) throw std::invalid_argument("Negated: null inner spec");
  }

  const UtilitySpec& inner() const { return *inner_; }

  std::string name() const override { return "negated:" + inner_->name(); }
  ModeRequirement mode() const override { return inner_->mode(); }

  ExtRational lower(std::span<const Natural> s) const override { return -inner_->upper(s); }
  ExtRational upper(std::span<const Natural> s) const override { return -inner_->lower(s); }

  bool unbounded_above() const override { return inner_->unbounded_below(); }
  bool unbounded_below() const override { return inner_->unbounded_above(); }
  ExtRational infimum() const override { return -inner_->supremum(); }
  ExtRational supremum() const override { return -inner_->infimum(); }
  std::optional<Rational> gap_bound(std::size_t n) const override { return inner_->gap_bound(n); }

  bool emit_heaven(Direction dir, std::span<const Natural> required, const Natural& pad, const Program& gen,
                   Assembler& as) const override {
    return inner_->emit_heaven(flip(dir), required, pad, gen, as);
  }

 private:
  UtilityPtr inner_;
};

/// Parses "discounted", "first", "ones", "signed_first", "negated:<spec>".
inline UtilityPtr make_utility(const std::string& name, const Rational& discount = Rational(1, 2)) {
  if (name.rfind("negated:", 0) == 0) return std::make_shared<Negated>(make_utility(name.substr(8), discount));
  if (name == "discounted") return std::make_shared<DiscountedReward>(discount);
  if (name == "first") return std::make_shared<FirstPerception>();
  if (name == "ones") return std::make_shared<OnesRunLength>();
  if (name == "signed_first") return std::make_shared<SignedFirstPerception>();
  throw ConfigError("unknown utility '" + name + "'");
}

// ---------------------------------------------------------------------------
// Candidate strings for the heaven finder.
//
// c(0) = (), c(2^a (2b + 1)) = b :: c(a) is a bijection N -> N*. Over X = N
// the naturals are the symbols. Over a finite X each natural n stands for a
// run of (n div |X|) + 1 copies of symbol (n mod |X|).

inline std::vector<std::uint64_t> natural_sequence(std::uint64_t i) {
  std::vector<std::uint64_t> out;
  while (i != 0) {
    const unsigned a = static_cast<unsigned>(__builtin_ctzll(i));
    const std::uint64_t odd = i >> a;
    out.push_back(odd >> 1);
    i = a;
  }
  return out;
}

inline std::vector<Natural> candidate_extension(std::uint64_t i, const Alphabets& a) {
  std::vector<Natural> out;
  for (std::uint64_t n : natural_sequence(i)) {
    if (a.naturals_mode()) {
      out.push_back(from_u64(n));
      continue;
    }
    const std::uint64_t k = *a.perception_size;
    const std::uint64_t run = n / k + 1;
    if (out.size() + run > (std::uint64_t{1} << 24)) throw std::length_error("candidate string too long");
    out.insert(out.end(), run, from_u64(n % k));
  }
  return out;
}

struct HeavenResult {
  std::optional<std::vector<Natural>> prefix;
  std::uint64_t candidate = 0;
  std::uint64_t cells = 0;
};

inline constexpr std::uint64_t kDefaultHeavenCap = std::uint64_t{1} << 25;

// H(m): dovetails U_L over candidates required ++ c(i) and returns the first
// (in cell order) with U_L >= m. Each U_L evaluation costs one step.
inline HeavenResult heaven_finder(const UtilitySpec& spec, std::span<const Natural> required, const Integer& m,
                                  std::uint64_t cap, const Alphabets& a) {
  spec.check_mode(a);
  for (const auto& x : required)
    if (!a.valid_perception(x)) throw ConfigError("required prefix symbol " + x.get_str() + " is outside X");

  const std::vector<Natural> base(required.begin(), required.end());
  const ExtRational target = Rational(m);
  TaskFamily<ExtRational> family;
  family.simulate = [&](std::uint64_t i, std::uint64_t t) -> std::optional<TaskFamily<ExtRational>::Halt> {
    if (t < 1) return std::nullopt;
    std::vector<Natural> s = base;
    auto ext = candidate_extension(i, a);
    s.insert(s.end(), ext.begin(), ext.end());
    return TaskFamily<ExtRational>::Halt{spec.lower(s), 1};
  };
  family.predicate = [&](const ExtRational& u) { return u >= target; };

  auto found = dovetail_search(family, cap);
  HeavenResult r;
  r.cells = found.cells_visited;
  if (found.found) {
    r.candidate = found.index;
    std::vector<Natural> s = base;
    auto ext = candidate_extension(found.index, a);
    s.insert(s.end(), ext.begin(), ext.end());
    r.prefix = std::move(s);
  }
  return r;
}

/// Environment that outputs s_k on action strings of length k <= |s| and c after.
inline Program pad_to_sequence_program(std::span<const Natural> s, const Natural& c) {
  Assembler as;
  std::vector<Assembler::Label> rows;
  as.emit(Op::Len);
  for (std::size_t t = 1; t <= s.size(); ++t) {
    rows.push_back(as.new_label());
    as.emit(Op::Dup);
    as.emit(Op::Push, from_u64(t));
    as.emit(Op::Sub);
    as.jump(Op::Jz, rows.back());
  }
  as.emit(Op::Push, c);
  as.emit(Op::Halt);
  for (std::size_t t = 0; t < s.size(); ++t) {
    as.bind(rows[t]);
    as.emit(Op::Push, s[t]);
    as.emit(Op::Halt);
  }
  return as.finish();
}

}  // namespace eudiv
