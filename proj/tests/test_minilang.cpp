#include "eudiv/minilang.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace eudiv;

namespace {

std::vector<Natural> nats(std::initializer_list<unsigned long> xs) {
  std::vector<Natural> out;
  for (auto x : xs) out.emplace_back(x);
  return out;
}

Outcome run_on(const std::string& text, std::initializer_list<unsigned long> input, std::uint64_t budget = 1000) {
  return run(parse_program(text), nats(input), StepBudget{budget});
}

}  // namespace

TEST(Codec, ZeroIsTheEmptyProgram) {
  EXPECT_TRUE(decode(Natural(0)).empty());
  EXPECT_EQ(encode(Program()), 0);
}

TEST(Codec, SmallIndicesAreSingleOpcodes) {
  // Bijective base 16: index d + 1 is the one-digit string d.
  EXPECT_EQ(decode(std::uint64_t{1}), Program({{Op::Halt, 0}}));
  EXPECT_EQ(decode(std::uint64_t{16}), Program({{Op::Last, 0}}));
  EXPECT_EQ(decode(std::uint64_t{3}).size(), 1u);
}

TEST(Codec, OperandChunks) {
  // push 9 = opcode 1, chunks 9 mod 8 = 1 with continuation, then 1.
  Program p({{Op::Push, 9}, {Op::Halt, 0}});
  std::vector<unsigned> digits = detail::index_digits(encode(p));
  EXPECT_EQ(digits, (std::vector<unsigned>{1, 9, 1, 0}));
  EXPECT_EQ(decode(encode(p)), p);
}

TEST(Codec, TruncatedOperandEndsTheStream) {
  // A single PUSH digit followed by a continuation chunk and nothing else.
  Program p = decode(detail::digits_index({1, 15}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].op, Op::Push);
  EXPECT_EQ(p[0].arg, 7);
}

TEST(Codec, JumpTargetsWrap) {
  // jmp with operand 5 in a one-instruction program wraps to 5 mod 2 = 1.
  Program p = decode(detail::digits_index({13, 5}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].arg, 1);
}

TEST(Codec, DecodeIsTotalAndRoundTrips) {
  for (std::uint64_t i = 0; i <= 20000; ++i) {
    Program p = decode(i);
    ASSERT_EQ(decode(encode(p)), p) << i;
  }
}

TEST(Codec, EncodeIsInjectiveOnGeneratedPrograms) {
  std::mt19937_64 rng(7);
  std::set<Natural> seen;
  std::set<std::string> texts;
  for (int i = 0; i < 2000; ++i) {
    Program p = oracle::random_program(rng, 10, 1000);
    Natural idx = encode(p);
    EXPECT_EQ(decode(idx), p);
    if (texts.insert(p.text()).second) {
      EXPECT_TRUE(seen.insert(idx).second);
    }
  }
}

TEST(Codec, LargeIndices) {
  Natural big = pow2(300) + 12345;
  Program p = decode(big);
  EXPECT_EQ(decode(encode(p)), p);
}

TEST(Text, RoundTripAndComments) {
  Program p = parse_program("push 3   # three\n\n  push 4\nadd\nhalt\n");
  EXPECT_EQ(p.text(), "push 3\npush 4\nadd\nhalt\n");
  EXPECT_EQ(parse_program(p.text()), p);
}

TEST(Text, Errors) {
  EXPECT_THROW(parse_program("frob\n"), std::invalid_argument);
  EXPECT_THROW(parse_program("push\n"), std::invalid_argument);
  EXPECT_THROW(parse_program("push -1\n"), std::invalid_argument);
  EXPECT_THROW(parse_program("halt 3\n"), std::invalid_argument);
  EXPECT_THROW(parse_program("jmp 5\n"), std::invalid_argument);
  EXPECT_NO_THROW(parse_program("jmp 1\n"));
}

TEST(Run, ConstantProgram) {
  for (auto input : {nats({}), nats({1, 0, 1}), nats({1, 1, 1, 1, 1, 1})}) {
    Outcome o = run(parse_program("push 7\nhalt\n"), input, StepBudget{10});
    ASSERT_TRUE(o.halted());
    EXPECT_EQ(o.value, 7);
    EXPECT_EQ(o.steps, 2u);
  }
}

TEST(Run, BackwardJumpRunsOutOfBudget) {
  Outcome o = run_on("push 1\njmp 0\n", {}, 1000);
  EXPECT_FALSE(o.halted());
  EXPECT_EQ(o.steps, 1000u);
  EXPECT_FALSE(o.proven_divergent);  // the stack keeps growing
}

TEST(Run, DivergenceProofs) {
  EXPECT_TRUE(run_on("", {}).proven_divergent);                   // empty program idles at its end
  EXPECT_TRUE(run_on("push 1\n", {}).proven_divergent);           // falls off the end
  EXPECT_TRUE(run_on("jmp 0\n", {}).proven_divergent);            // exact repeated state
  EXPECT_TRUE(run_on("push 1\ndrop\njmp 0\n", {}).proven_divergent);
}

TEST(Run, Arithmetic) {
  EXPECT_EQ(run_on("push 3\npush 5\nsub\nhalt\n", {}).value, 0);  // truncated
  EXPECT_EQ(run_on("push 5\npush 3\nsub\nhalt\n", {}).value, 2);
  EXPECT_EQ(run_on("push 6\npush 7\nmul\nhalt\n", {}).value, 42);
  EXPECT_EQ(run_on("push 2\npush 10\npow\nhalt\n", {}).value, 1024);
  EXPECT_EQ(run_on("push 1\npush 2\nswap\nhalt\n", {}).value, 1);
  EXPECT_EQ(run_on("push 1\npush 2\nover\nhalt\n", {}).value, 1);
  EXPECT_EQ(run_on("push 4\ndup\nadd\nhalt\n", {}).value, 8);
  EXPECT_EQ(run_on("push 4\npush 9\ndrop\nhalt\n", {}).value, 4);
}

TEST(Run, EmptyStackReadsZero) {
  EXPECT_EQ(run_on("halt\n", {}).value, 0);
  EXPECT_EQ(run_on("add\nhalt\n", {}).value, 0);
  EXPECT_EQ(run_on("dup\nhalt\n", {}).value, 0);
}

TEST(Run, InputOps) {
  EXPECT_EQ(run_on("len\nhalt\n", {1, 0, 1}).value, 3);
  EXPECT_EQ(run_on("read\nhalt\n", {4, 5}).value, 4);
  EXPECT_EQ(run_on("next\nread\nhalt\n", {4, 5}).value, 5);
  EXPECT_EQ(run_on("next\nnext\nnext\nread\nhalt\n", {4, 5}).value, 0);
  EXPECT_EQ(run_on("last\nhalt\n", {4, 5}).value, 5);
  EXPECT_EQ(run_on("last\nhalt\n", {}).value, 0);
}

TEST(Run, BigPowersChargeSteps) {
  // 2^6400 has 6401 bits: 1 + 100 extra steps for pow.
  Outcome o = run_on("push 2\npush 6400\npow\nhalt\n", {}, 1000);
  ASSERT_TRUE(o.halted());
  EXPECT_EQ(o.steps, 4u + 100u);
  EXPECT_FALSE(run_on("push 2\npush 6400\npow\nhalt\n", {}, 50).halted());
  EXPECT_FALSE(run_on("push 2\npush 1000000000000\npow\nhalt\n", {}, 1000000).halted());
}

TEST(Run, BudgetMonotone) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    Program p = decode(from_u64(rng()));
    std::vector<Natural> input = nats({1, 0, 1});
    Outcome small = run(p, input, StepBudget{30});
    Outcome again = run(p, input, StepBudget{30});
    Outcome large = run(p, input, StepBudget{3000});
    EXPECT_EQ(small, again);
    if (small.halted()) {
      EXPECT_EQ(small, large);
    }
    if (small.proven_divergent) {
      EXPECT_TRUE(!large.halted() && large.proven_divergent);
    }
  }
}

TEST(Run, FiniteAlphabetReducesOutput) {
  const Alphabets a = Alphabets::finite(2, 3);
  Outcome o = run(parse_program("push 7\nhalt\n"), nats({1}), StepBudget{10}, a);
  EXPECT_EQ(o.value, 1);
  EXPECT_THROW(run(parse_program("halt\n"), nats({2}), StepBudget{10}, a), std::invalid_argument);
  const Alphabets n = Alphabets::naturals(2);
  EXPECT_EQ(run(parse_program("push 7\nhalt\n"), nats({1}), StepBudget{10}, n).value, 7);
}

TEST(Alphabets, Validation) {
  EXPECT_THROW(Alphabets::finite(1, 2), std::invalid_argument);
  EXPECT_THROW(Alphabets::finite(2, 1), std::invalid_argument);
  EXPECT_THROW(StepBudget{0}, std::invalid_argument);
  const Alphabets a = Alphabets::finite(3, 2);
  EXPECT_TRUE(a.valid_action(2));
  EXPECT_FALSE(a.valid_action(3));
  EXPECT_FALSE(a.valid_perception(2));
  EXPECT_TRUE(Alphabets::naturals(2).valid_perception(pow2(100)));
}

TEST(Totality, LoopFreeCertificate) {
  EXPECT_TRUE(parse_program("push 1\nhalt\n").loop_free_total());
  EXPECT_TRUE(parse_program("len\njz 3\npush 1\nhalt\n").loop_free_total());
  EXPECT_FALSE(parse_program("").loop_free_total());
  EXPECT_FALSE(parse_program("push 1\n").loop_free_total());
  EXPECT_FALSE(parse_program("jmp 0\n").loop_free_total());
  EXPECT_FALSE(parse_program("len\njz 3\nhalt\n").loop_free_total());  // jump to the end
}

TEST(Assembler, LabelsAndInlining) {
  Assembler as;
  auto skip = as.new_label();
  as.jump(Op::Jmp, skip);
  as.emit(Op::Push, 1);
  as.bind(skip);
  as.inline_value_program(parse_program("push 2\npush 5\npow\nhalt\n"));
  as.emit(Op::Halt);
  Program p = as.finish();
  Outcome o = run(p, nats({}), StepBudget{100});
  ASSERT_TRUE(o.halted());
  EXPECT_EQ(o.value, 32);
}

TEST(Assembler, InlinedGeneratorSeesNoInput) {
  Assembler as;
  as.inline_value_program(parse_program("len\nlast\nadd\nhalt\n"));
  as.emit(Op::Halt);
  Outcome o = run(as.finish(), nats({5, 5, 5}), StepBudget{100});
  ASSERT_TRUE(o.halted());
  EXPECT_EQ(o.value, 0);
}

TEST(Assembler, InlinedLoopKeepsItsJumps) {
  // Counts down from 3 and returns 0; the generator's jumps are relocated.
  Assembler as;
  as.emit(Op::Push, 9);
  as.emit(Op::Drop);
  as.inline_value_program(parse_program("push 3\ndup\njz 6\npush 1\nsub\njmp 1\nhalt\n"));
  as.emit(Op::Halt);
  Outcome o = run(as.finish(), nats({}), StepBudget{100});
  ASSERT_TRUE(o.halted());
  EXPECT_EQ(o.value, 0);
}

TEST(Assembler, UnboundLabelIsALogicError) {
  Assembler as;
  auto l = as.new_label();
  as.jump(Op::Jz, l);
  EXPECT_THROW(as.finish(), std::logic_error);
  EXPECT_THROW(as.emit(Op::Jmp, 0), std::logic_error);
}
