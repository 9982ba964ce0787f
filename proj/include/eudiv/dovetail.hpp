#pragma once

#include "eudiv/numeric.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace eudiv {

/// Cantor pairing: pi(k1, k2) = (k1 + k2)(k1 + k2 + 1)/2 + k2.
inline Natural pair(const Natural& k1, const Natural& k2) {
  if (k1 < 0 || k2 < 0) throw std::invalid_argument("pair: arguments must be natural");
  Natural s = k1 + k2;
  Natural tri = s * (s + 1) / 2;
  return tri + k2;
}

inline std::pair<Natural, Natural> unpair(const Natural& n) {
  if (n < 0) throw std::invalid_argument("unpair: argument must be natural");
  // w = floor((sqrt(8n + 1) - 1) / 2)
  Natural root;
  Natural disc = 8 * n + 1;
  mpz_sqrt(root.get_mpz_t(), disc.get_mpz_t());
  Natural w = (root - 1) / 2;
  Natural tri = w * (w + 1) / 2;
  Natural k2 = n - tri;
  Natural k1 = w - k2;
  return {k1, k2};
}

inline std::uint64_t pair(std::uint64_t k1, std::uint64_t k2) {
  const unsigned __int128 s = static_cast<unsigned __int128>(k1) + k2;
  const unsigned __int128 r = s * (s + 1) / 2 + k2;
  if (r >> 64) throw std::overflow_error("pair: result exceeds 64 bits");
  return static_cast<std::uint64_t>(r);
}

inline std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t n) {
  auto tri = [](unsigned __int128 w) { return w * (w + 1) / 2; };
  unsigned __int128 w = static_cast<unsigned __int128>(
      (std::sqrt(8.0 * static_cast<double>(n) + 1.0) - 1.0) / 2.0);
  while (tri(w) > n) --w;
  while (tri(w + 1) <= n) ++w;
  const std::uint64_t k2 = static_cast<std::uint64_t>(n - tri(w));
  const std::uint64_t k1 = static_cast<std::uint64_t>(w) - k2;
  return {k1, k2};
}

// Family of budgeted computations indexed by naturals. simulate(i, t) runs
// task i for at most t steps and returns the result iff it halted; it must be
// deterministic and monotone in t. halt_steps, when the task halts, reports
// how many steps the run took (used to reuse earlier simulations).
template <class Result>
struct TaskFamily {
  struct Halt {
    Result result;
    std::uint64_t steps = 0;
  };
  std::function<std::optional<Halt>(std::uint64_t index, std::uint64_t steps)> simulate;
  std::function<bool(const Result&)> predicate;
};

template <class Result>
struct SearchOutcome {
  bool found = false;
  std::uint64_t index = 0;
  std::uint64_t cell = 0;       // the cell n where the hit was committed
  std::uint64_t cells_visited = 0;
  std::optional<Result> result;
};

// Visits cells n = 1, 2, ..., global_cap; cell n is (t, i) = unpair(n) and
// simulates task i for t steps. Returns the first halted result that passes
// the predicate, in cell order.
template <class Result>
SearchOutcome<Result> dovetail_search(const TaskFamily<Result>& family, std::uint64_t global_cap) {
  if (global_cap < 1) throw std::invalid_argument("dovetail_search: global_cap must be >= 1");

  // Per task: the largest step count known not to halt, or the halting run.
  struct Memo {
    std::uint64_t no_halt_upto = 0;
    std::optional<typename TaskFamily<Result>::Halt> halt;
  };
  std::vector<Memo> memo;

  SearchOutcome<Result> out;
  for (std::uint64_t n = 1; n <= global_cap; ++n) {
    out.cells_visited = n;
    auto [t, i] = unpair(n);
    if (t == 0) continue;
    if (i >= memo.size()) memo.resize(i + 1);
    Memo& m = memo[i];

    const typename TaskFamily<Result>::Halt* halted = nullptr;
    if (m.halt) {
      if (m.halt->steps <= t) halted = &*m.halt;
    } else if (t > m.no_halt_upto) {
      auto r = family.simulate(i, t);
      if (r) {
        if (r->steps > t) throw std::logic_error("dovetail_search: task reported more steps than allowed");
        m.halt = std::move(r);
        halted = &*m.halt;
      } else {
        m.no_halt_upto = t;
      }
    }
    if (halted && family.predicate(halted->result)) {
      out.found = true;
      out.index = i;
      out.cell = n;
      out.result = halted->result;
      return out;
    }
  }
  return out;
}

}  // namespace eudiv
