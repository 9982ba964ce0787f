#pragma once

// Prior weights over program indices, conditioning on a history, and the
// three-way mass ledger (consistent / refuted / unknown) with exact rationals.

#include "eudiv/errors.hpp"
#include "eudiv/interaction.hpp"
#include "eudiv/minilang.hpp"
#include "eudiv/numeric.hpp"
#include "eudiv/parallel.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace eudiv {

// rho: index -> positive rational with a closed-form tail.
//   geometric: rho(i) = 2^-i,             sum = 2, tail after N = 2^-N
//   quadratic: rho(i) = 1/((i+1)(i+2)),   sum = 1, tail after N = 1/(N+2)
class Prior {
 public:
  enum class Kind { Geometric, Quadratic };

  // Largest index whose geometric weight is materialized exactly.
  static constexpr std::uint64_t kMaxGeometricIndex = std::uint64_t{1} << 26;

  static Prior geometric() { return Prior(Kind::Geometric); }
  static Prior quadratic() { return Prior(Kind::Quadratic); }

  static Prior from_name(const std::string& name) {
    if (name == "geometric") return geometric();
    if (name == "quadratic") return quadratic();
    throw ConfigError("unknown prior '" + name + "' (expected geometric or quadratic)");
  }

  Kind kind() const { return kind_; }
  std::string name() const { return kind_ == Kind::Geometric ? "geometric" : "quadratic"; }

  Rational weight(const Natural& i) const {
    if (i < 0) throw std::invalid_argument("prior weight of a negative index");
    if (kind_ == Kind::Geometric) {
      if (i > from_u64(kMaxGeometricIndex))
        throw std::overflow_error("2^-" + i.get_str() + " is not representable");
      return inverse_pow2(i.get_ui());
    }
    Natural d = (i + 1) * (i + 2);
    return Rational(Natural(1), d);
  }

  Rational weight(std::uint64_t i) const { return weight(from_u64(i)); }

  /// sum_{i <= n} rho(i)
  Rational partial_sum(std::uint64_t n) const { return total() - tail(n); }

  /// sum_{i > n} rho(i)
  Rational tail(std::uint64_t n) const {
    if (kind_ == Kind::Geometric) return inverse_pow2(n);
    return Rational(Natural(1), from_u64(n) + 2);
  }

  Rational total() const { return kind_ == Kind::Geometric ? Rational(2) : Rational(1); }

 private:
  explicit Prior(Kind k) : kind_(k) {}
  Kind kind_;
};

struct Classification {
  enum class Kind { Consistent, Refuted, Unknown };

  Kind kind = Kind::Consistent;
  std::size_t at = 0;      // prefix length where refuted / unresolved
  bool divergent = false;  // refuted because that prefix provably never halts

  bool consistent() const { return kind == Kind::Consistent; }
  bool refuted() const { return kind == Kind::Refuted; }
  bool unknown() const { return kind == Kind::Unknown; }

  std::string str() const {
    switch (kind) {
      case Kind::Consistent: return "consistent";
      case Kind::Refuted: return (divergent ? "divergent@" : "refuted@") + std::to_string(at);
      default: return "unknown@" + std::to_string(at);
    }
  }

  friend bool operator==(const Classification&, const Classification&) = default;
};

/// Whether q reproduces h within the budget.
inline Classification classify(const Program& q, const History& h, StepBudget budget, const Alphabets& a) {
  a.check_actions(h.actions);
  const std::span<const Natural> actions(h.actions);
  for (std::size_t k = 1; k <= h.size(); ++k) {
    Outcome o = run(q, actions.first(k), budget);
    if (!o.halted()) {
      if (o.proven_divergent) return {Classification::Kind::Refuted, k, true};
      return {Classification::Kind::Unknown, k, false};
    }
    if (a.to_perception(std::move(o.value)) != h.perceptions[k - 1])
      return {Classification::Kind::Refuted, k, false};
  }
  return {};
}

struct PosteriorEntry {
  Classification cls;
  Rational rho;
};

class PosteriorTable {
 public:
  PosteriorTable(Prior prior, std::uint64_t cutoff, std::vector<PosteriorEntry> entries)
      : prior_(prior), cutoff_(cutoff), entries_(std::move(entries)) {
    for (const auto& e : entries_) {
      switch (e.cls.kind) {
        case Classification::Kind::Consistent: consistent_ += e.rho; break;
        case Classification::Kind::Refuted: refuted_ += e.rho; break;
        case Classification::Kind::Unknown: unknown_ += e.rho; break;
      }
    }
    tail_ = prior_.tail(cutoff_);
  }

  const Prior& prior() const { return prior_; }
  std::uint64_t cutoff() const { return cutoff_; }
  const std::vector<PosteriorEntry>& entries() const { return entries_; }
  const PosteriorEntry& at(std::uint64_t i) const { return entries_.at(i); }

  const Rational& consistent_mass() const { return consistent_; }
  const Rational& refuted_mass() const { return refuted_; }
  const Rational& unknown_mass() const { return unknown_; }
  const Rational& tail_mass() const { return tail_; }

  /// Largest possible normalizer: every unresolved program consistent.
  Rational normalizer_upper() const { return consistent_ + unknown_ + tail_; }

  /// Posterior lower bound for a consistent program of prior weight rho.
  Rational posterior_lower(const Rational& rho) const { return rho / normalizer_upper(); }

  /// Posterior upper bound; rho must not already be counted in the consistent mass.
  Rational posterior_upper_external(const Rational& rho) const { return rho / (consistent_ + rho); }

  Rational post_lower(std::uint64_t i) const {
    const auto& e = entries_.at(i);
    if (!e.cls.consistent()) return 0;
    return posterior_lower(e.rho);
  }

  Rational post_upper(std::uint64_t i) const {
    const auto& e = entries_.at(i);
    if (e.cls.refuted() || consistent_ == 0) return 0;
    if (e.cls.unknown()) return e.rho / (consistent_ + e.rho);
    return e.rho / consistent_;
  }

  /// CSV: index, classification, rho_num, rho_den, post_lower, post_upper.
  void write_csv(std::ostream& out) const {
    out << "index,classification,rho_num,rho_den,post_lower,post_upper\n";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      out << i << ',' << e.cls.str() << ',' << e.rho.get_num().get_str() << ',' << e.rho.get_den().get_str()
          << ',' << to_fraction(post_lower(i)) << ',' << to_fraction(post_upper(i)) << '\n';
    }
  }

 private:
  Prior prior_;
  std::uint64_t cutoff_;
  std::vector<PosteriorEntry> entries_;
  Rational consistent_ = 0, refuted_ = 0, unknown_ = 0, tail_ = 0;
};

/// Classifies decode(i) for every i <= cutoff without requiring support.
inline PosteriorTable classify_range(const History& h, std::uint64_t cutoff, StepBudget budget,
                                     const Alphabets& a, const Prior& prior, unsigned threads = 1) {
  h.validate(a);
  std::vector<PosteriorEntry> entries(cutoff + 1);
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    entries[i].cls = classify(decode(static_cast<std::uint64_t>(i)), h, budget, a);
    entries[i].rho = prior.weight(static_cast<std::uint64_t>(i));
  });
  return PosteriorTable(prior, cutoff, std::move(entries));
}

inline PosteriorTable build_posterior(const History& h, std::uint64_t cutoff, StepBudget budget,
                                      const Alphabets& a, const Prior& prior, unsigned threads = 1) {
  PosteriorTable t = classify_range(h, cutoff, budget, a, prior, threads);
  if (t.consistent_mass() == 0)
    throw EmptySupport("no enumerated program up to index " + std::to_string(cutoff) +
                       " is consistent with the history");
  return t;
}

struct NormalizationBounds {
  Rational lower;
  Rational upper;
  std::uint64_t certified = 0;
};

/// All action strings over Y of length 1..max_len.
inline std::vector<std::vector<Natural>> probe_inputs(const Alphabets& a, std::size_t max_len) {
  std::vector<std::vector<Natural>> out;
  std::vector<std::vector<Natural>> layer{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<Natural>> next;
    for (const auto& s : layer) {
      for (std::uint64_t y = 0; y < a.action_size; ++y) {
        auto t = s;
        t.push_back(from_u64(y));
        next.push_back(std::move(t));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

// Bounds on O = sum of rho(i) over total programs. A program counts toward the
// lower bound only with a loop-free totality certificate and halting within
// budget on every probe input.
inline NormalizationBounds normalization_bounds(std::uint64_t cutoff, StepBudget budget, std::size_t probe_len,
                                                const Alphabets& a, const Prior& prior, unsigned threads = 1) {
  if (probe_len < 1) throw std::invalid_argument("probe_len must be >= 1");
  const auto probes = probe_inputs(a, probe_len);
  std::vector<char> certified(cutoff + 1, 0);
  parallel_for(certified.size(), threads, [&](std::size_t i) {
    Program p = decode(static_cast<std::uint64_t>(i));
    if (!p.loop_free_total()) return;
    for (const auto& s : probes)
      if (!run(p, s, budget).halted()) return;
    certified[i] = 1;
  });
  NormalizationBounds b;
  Rational uncertified = 0;
  for (std::size_t i = 0; i < certified.size(); ++i) {
    Rational w = prior.weight(static_cast<std::uint64_t>(i));
    if (certified[i]) {
      b.lower += w;
      ++b.certified;
    } else {
      uncertified += w;
    }
  }
  b.upper = b.lower + uncertified + prior.tail(cutoff);
  return b;
}

}  // namespace eudiv
