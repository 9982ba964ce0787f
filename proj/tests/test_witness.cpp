#include "eudiv/witness.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace eudiv;

namespace {

std::vector<Natural> nats(std::initializer_list<unsigned long> xs) {
  std::vector<Natural> out;
  for (auto x : xs) out.emplace_back(x);
  return out;
}

const Alphabets kNaturals = Alphabets::naturals(2);
const Alphabets kBinary = Alphabets::finite(2, 2);

Program generator(unsigned long base, unsigned long e) {
  return Program({{Op::Push, base}, {Op::Push, e}, {Op::Pow, 0}, {Op::Halt, 0}});
}

}  // namespace

TEST(BusyBeaver, UndefinedWhenNothingHalts) {
  EXPECT_FALSE(busy_beaver_lb(0, StepBudget{100}).has_value());  // index 0 never halts
  EXPECT_THROW(argmax_u(0, StepBudget{100}), NoHaltingWitness);
}

TEST(BusyBeaver, SingleHalter) {
  // Index 1 is `halt`, the only program up to 1 that halts.
  EXPECT_EQ(*busy_beaver_lb(1, StepBudget{100}), 0);
  EXPECT_EQ(argmax_u(1, StepBudget{100}), 1u);
}

TEST(BusyBeaver, MatchesDirectEnumeration) {
  auto rows = busy_beaver_table(200, StepBudget{10000});
  for (std::uint64_t n = 0; n <= 200; ++n) ASSERT_EQ(rows[n].bound, oracle::busy_beaver_direct(n, StepBudget{10000}));
}

TEST(BusyBeaver, MonotoneInNAndBudget) {
  auto lo = busy_beaver_table(300, StepBudget{5});
  auto hi = busy_beaver_table(300, StepBudget{500});
  for (std::uint64_t n = 1; n <= 300; ++n) {
    if (lo[n - 1].bound) {
      ASSERT_TRUE(lo[n].bound && *lo[n].bound >= *lo[n - 1].bound);
    }
    if (lo[n].bound) {
      ASSERT_TRUE(hi[n].bound && *hi[n].bound >= *lo[n].bound);
    }
  }
}

TEST(BusyBeaver, ArgmaxIsSmallestMaximizer) {
  auto rows = busy_beaver_table(400, StepBudget{1000});
  for (std::uint64_t j = 1; j <= 400; ++j) {
    const std::uint64_t k = argmax_u(j, StepBudget{1000});
    ASSERT_LE(k, j);
    ASSERT_EQ(rows[k].theta, rows[j].bound);
    for (std::uint64_t i = 0; i < k; ++i) ASSERT_TRUE(!rows[i].theta || *rows[i].theta < *rows[j].bound);
  }
}

TEST(BusyBeaver, ParallelMatchesSerial) {
  auto a = busy_beaver_table(500, StepBudget{300}, 1);
  auto b = busy_beaver_table(500, StepBudget{300}, 8);
  for (std::size_t n = 0; n < a.size(); ++n) {
    ASSERT_EQ(a[n].bound, b[n].bound);
    ASSERT_EQ(a[n].argmax, b[n].argmax);
  }
}

TEST(SynthesizeLiteral, AlreadySatisfiedReplaysHistory) {
  FirstPerception u;
  History h{nats({1}), nats({7})};
  SynthesizedEnv env = synthesize_G(Natural(5), h, u, 0, kDefaultHeavenCap, kNaturals);
  EXPECT_EQ(env.prefix, nats({7}));
  EXPECT_EQ(gamma(env.program, nats({1, 0, 1}), StepBudget{100}, kNaturals).perceptions, nats({7, 0, 0}));
  EXPECT_EQ(decode(env.index), env.program);
}

TEST(SynthesizeLiteral, FirstPerceptionFifty) {
  FirstPerception u;
  SynthesizedEnv env = synthesize_G(Natural(50), History{}, u, 0, kDefaultHeavenCap, kNaturals);
  EXPECT_TRUE(classify(env.program, History{}, StepBudget{1000}, kNaturals).consistent());
  auto w = w_p(env.program, ConstantAction{1}, History{}, 3, StepBudget{1000}, kNaturals);
  EXPECT_GE(u.lower(w), ExtRational(50L));
}

TEST(SynthesizeLiteral, IndexSizeLinearInPrefix) {
  OnesRunLength u;
  const Prior quad = Prior::quadratic();
  for (unsigned long v = 1; v <= 40; ++v) {
    SynthesizedEnv env = synthesize_G(Natural(v), History{}, u, 0, kDefaultHeavenCap, kBinary);
    ASSERT_GT(quad.weight(env.index), 0);
    const Rational inv = 1 / quad.weight(env.index);
    const std::size_t bits = mpz_sizeinbase(ceil(inv).get_mpz_t(), 2);
    EXPECT_LE(bits, 128 * (env.prefix.size() + 1)) << v;
  }
}

TEST(SynthesizeLiteral, ExhaustedPropagates) {
  DiscountedReward u(Rational(1, 2));
  EXPECT_THROW(synthesize_G(Natural(5), History{}, u, 0, 1000, kBinary), Exhausted);
  FirstPerception f;
  EXPECT_THROW(synthesize_G(Natural(5), History{}, f, 2, 1000, kBinary), ConfigError);
}

TEST(SynthesizeTheta, FirstPerceptionAfterHistory) {
  FirstPerception u;
  // After a nonempty history FirstPerception has no runtime template: x_1 is fixed.
  History h{nats({1}), nats({3})};
  EXPECT_THROW(synthesize_G_from_theta(generator(2, 10), h, u, 0, Direction::Above, kNaturals), ConfigError);
}

TEST(SynthesizeTheta, OnesReplaysHistoryThenEmitsRun) {
  OnesRunLength u;
  History h{nats({0, 1}), nats({1, 1})};
  SynthesizedEnv env = synthesize_G_from_theta(generator(2, 3), h, u, 0, Direction::Above, kBinary);
  EXPECT_TRUE(classify(env.program, h, StepBudget{1000}, kBinary).consistent());
  auto w = w_p(env.program, ConstantAction{0}, h, 10, StepBudget{1000}, kBinary);
  EXPECT_EQ(w, nats({1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0}));
  EXPECT_GE(u.lower(w), ExtRational(8L));
}

TEST(SynthesizeTheta, SignedBothDirections) {
  SignedFirstPerception u;
  auto above = synthesize_G_from_theta(generator(3, 4), History{}, u, 0, Direction::Above, kNaturals);
  auto below = synthesize_G_from_theta(generator(3, 4), History{}, u, 0, Direction::Below, kNaturals);
  auto wa = w_p(above.program, ConstantAction{0}, History{}, 2, StepBudget{1000}, kNaturals);
  auto wb = w_p(below.program, ConstantAction{0}, History{}, 2, StepBudget{1000}, kNaturals);
  EXPECT_EQ(u.lower(wa), ExtRational(81L));
  EXPECT_EQ(u.upper(wb), ExtRational(-82L));
  Negated neg(std::make_shared<FirstPerception>());
  auto nb = synthesize_G_from_theta(generator(3, 4), History{}, neg, 0, Direction::Below, kNaturals);
  auto wn = w_p(nb.program, ConstantAction{0}, History{}, 1, StepBudget{1000}, kNaturals);
  EXPECT_EQ(neg.upper(wn), ExtRational(-81L));
  EXPECT_THROW(synthesize_G_from_theta(generator(3, 4), History{}, neg, 0, Direction::Above, kNaturals),
               ConfigError);
}

TEST(SynthesizeTheta, IndexGrowsWithGeneratorNotValue) {
  FirstPerception u;
  auto small = synthesize_G_from_theta(generator(2, 8), History{}, u, 0, Direction::Above, kNaturals);
  auto huge = synthesize_G_from_theta(generator(2, 4096), History{}, u, 0, Direction::Above, kNaturals);
  EXPECT_LT(mpz_sizeinbase(huge.index.get_mpz_t(), 2), mpz_sizeinbase(small.index.get_mpz_t(), 2) + 32);
}

TEST(RhoBar, Examples) {
  const Prior geo = Prior::geometric();
  EXPECT_EQ(rho_bar(0, nats({3}), geo), 8);
  EXPECT_EQ(rho_bar(1, nats({3, 1}), geo), 8);
  const Prior quad = Prior::quadratic();
  EXPECT_EQ(rho_bar(0, nats({1}), quad), 6);
  EXPECT_EQ(rho_bar(1, nats({1, 4}), quad), 30);
  EXPECT_THROW(rho_bar(2, nats({1, 4}), quad), std::invalid_argument);
}

TEST(RhoBar, NondecreasingAlongTrace) {
  std::mt19937_64 rng(8);
  std::vector<Natural> trace;
  for (int i = 0; i < 50; ++i) trace.push_back(from_u64(rng() % 100000));
  Natural prev = 0;
  for (std::size_t j = 0; j < trace.size(); ++j) {
    Natural r = rho_bar(j, trace, Prior::quadratic());
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(Term, ProductIsExact) {
  FirstPerception u;
  History h;
  PosteriorTable table = build_posterior(h, 64, StepBudget{1000}, kNaturals, Prior::quadratic());
  auto env = synthesize_G_from_theta(generator(2, 300), h, u, 0, Direction::Above, kNaturals);
  TermBound tb = term_bound(env.index, ConstantAction{0}, h, u, table, 1, StepBudget{100000}, kNaturals);
  EXPECT_EQ(tb.posterior_lower, Prior::quadratic().weight(env.index) / table.normalizer_upper());
  EXPECT_EQ(tb.utility, ExtRational(Rational(pow2(300))));
  EXPECT_EQ(tb.term, tb.utility.scaled(tb.posterior_lower));
  // term >= 1 iff utility >= 1 / posterior_lower
  EXPECT_EQ(tb.term >= ExtRational(1L), tb.utility >= ExtRational(Rational(1 / tb.posterior_lower)));
  EXPECT_EQ(term_magnitude(env.index, ConstantAction{0}, h, u, table, 1, StepBudget{100000}, kNaturals), tb.term);
}

TEST(Term, ZeroUtilityGivesZero) {
  FirstPerception u;
  History h;
  PosteriorTable table = build_posterior(h, 64, StepBudget{1000}, kNaturals, Prior::quadratic());
  // Index 1 is `halt`: outputs 0 forever.
  TermBound tb = term_bound(Natural(1), ConstantAction{0}, h, u, table, 2, StepBudget{100}, kNaturals);
  EXPECT_EQ(tb.term, ExtRational(0L));
}

TEST(Term, RefutedEnvironmentIsADomainError) {
  FirstPerception u;
  History h{nats({0}), nats({0})};
  PosteriorTable table = build_posterior(h, 64, StepBudget{1000}, kNaturals, Prior::quadratic());
  EXPECT_THROW(term_bound(Natural(0), ConstantAction{0}, h, u, table, 1, StepBudget{100}, kNaturals), DomainError);
  Program five({{Op::Push, 5}, {Op::Halt, 0}});
  EXPECT_THROW(term_bound(encode(five), ConstantAction{0}, h, u, table, 1, StepBudget{100}, kNaturals), DomainError);
}

TEST(Records, JsonLines) {
  WitnessRecord r;
  r.j = 40;
  r.u_j = 40;
  r.v = 1024;
  r.env_index = Natural("123456789012345678901234567890");
  r.utility = ExtRational(1024L);
  r.posterior_lower = Rational(1, 512);
  r.term = ExtRational(2L);
  r.rho_bar = 512;
  std::ostringstream out;
  write_jsonl(out, std::vector<WitnessRecord>{r});
  const std::string line = out.str();
  EXPECT_NE(line.find("\"env_index\":\"123456789012345678901234567890\""), std::string::npos);
  EXPECT_NE(line.find("\"term_lower\":\"2/1\""), std::string::npos);
  EXPECT_NE(line.find("\"posterior_lower\":\"1/512\""), std::string::npos);
  EXPECT_EQ(line.back(), '\n');
}
