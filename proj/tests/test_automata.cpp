#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tpa/automaton.hpp"
#include "tpa/builtins.hpp"
#include "tpa/errors.hpp"

#include "helpers.hpp"

using namespace tpa;
using namespace tpatest;

namespace {

/// fair_merge with the transitions for one specific input removed; a
/// reactivity violation the checks must find.
Automaton broken_merge() {
  Automaton a = fair_merge();
  TransitionGen inner = a.transitions;
  a.transitions = [inner](const Value& s, const NamedSeq& in, const TransitionSink& sink) {
    if (in.at("i") == seq({1}) && in.at("j").empty()) return;  // swallowed
    inner(s, in, sink);
  };
  return a;
}

std::set<std::string> output_column_set(const std::set<TimedTrace>& behs, const std::string& ch) {
  std::set<std::string> out;
  for (const auto& b : behs) out.insert(render_output_column(b, ch));
  return out;
}

}  // namespace

TEST_CASE("merge transitions match the selector-sequence oracle") {
  Automaton fm = fair_merge();
  Rng rng(11);
  for (int round = 0; round < 40; ++round) {
    MsgSeq a, b;
    for (std::size_t k = rng.below(4); k > 0; --k) a.push_back(int_msg(static_cast<int>(rng.below(3))));
    for (std::size_t k = rng.below(4); k > 0; --k) b.push_back(int_msg(static_cast<int>(rng.below(3)) + 10));
    NamedSeq in = ns({{"i", a}, {"j", b}});
    std::set<std::string> got;
    fm.transitions(Value(), in, [&](const Transition& t) {
      got.insert(render_seq(t.action.at("o")));
      return true;
    });
    CHECK(got == merge_oracle(a, b));
  }
}

TEST_CASE("merge of one empty side copies the other") {
  Automaton fm = fair_merge();
  TimedTrace in = sum_trace(input1("i", {seq({})}), input1("j", {seq({5, 6})}));
  Execution e = execute(fm, in, ChoicePolicy::first_choice());
  CHECK(e.actions.tick(1).at("o") == seq({5, 6}));

  TimedTrace in2 = sum_trace(input1("i", {seq({1, 2})}), input1("j", {seq({})}));
  CHECK(execute(fm, in2, ChoicePolicy::first_choice()).actions.tick(1).at("o") == seq({1, 2}));

  TimedTrace in3 = sum_trace(input1("i", {seq({})}), input1("j", {seq({})}));
  CHECK(execute(fm, in3, ChoicePolicy::first_choice()).actions.tick(1).at("o").empty());
}

TEST_CASE("buffer reproduces a single message with one tick of forced delay") {
  Automaton buf = buffer();
  TimedTrace in = input1("i", {seq({7}), seq({}), seq({})});
  // Tick 1: empty buffer forces empty output; tick 2: nonempty buffer forces
  // emission and order preservation leaves no choice but the message itself.
  for (auto policy : {ChoicePolicy::first_choice(), ChoicePolicy::random_choice(3)}) {
    Execution e = execute(buf, in, policy);
    CHECK(e.actions.tick(1).at("o").empty());
    CHECK(e.actions.tick(2).at("o") == seq({7}));
    CHECK(e.actions.tick(3).at("o").empty());
  }
}

TEST_CASE("buffer behaviors are exactly the forced-emission splits") {
  Automaton buf = buffer();
  TimedTrace in = input1("i", {seq({1, 2}), seq({}), seq({})});
  std::set<TimedTrace> behs = behaviors(buf, in, ChoicePolicy::enumerate(64));
  CHECK(output_column_set(behs, "o") == buffer_oracle(in));
  // Concretely: tick-2 emission must be nonempty and order preserving.
  CHECK(output_column_set(behs, "o") ==
        std::set<std::string>{"|int:1 |int:2 |", "|int:1 int:2 ||"});
}

TEST_CASE("merge behaviors on one tick") {
  Automaton fm = fair_merge();
  TimedTrace in = sum_trace(input1("i", {seq({1})}), input1("j", {seq({2})}));
  std::set<TimedTrace> behs = behaviors(fm, in, ChoicePolicy::enumerate(16));
  CHECK(behs.size() == 2);
  CHECK(output_column_set(behs, "o") == std::set<std::string>{"int:1 int:2 |", "int:2 int:1 |"});
}

TEST_CASE("behaviors of a deterministic automaton form a singleton") {
  Automaton buf = buffer();
  TimedTrace in = input1("i", {seq({3}), seq({})});
  CHECK(behaviors(buf, in, ChoicePolicy::enumerate(16)).size() == 1);
}

TEST_CASE("behaviors at horizon zero contain only the empty trace") {
  Automaton fm = fair_merge();
  TimedTrace in(fm.sig.inputs, 0);
  std::set<TimedTrace> behs = behaviors(fm, in, ChoicePolicy::enumerate(16));
  CHECK(behs.size() == 1);
  CHECK(behs.begin()->horizon() == 0);
}

TEST_CASE("behaviors restricted to the inputs reproduce the input") {
  Automaton fm = fair_merge();
  Rng rng(21);
  for (int round = 0; round < 10; ++round) {
    TimedTrace in = random_input_trace(fm.sig, 3, rng);
    for (const auto& b : behaviors(fm, in, ChoicePolicy::enumerate(8)))
      CHECK(project_trace(b, fm.sig.inputs) == in);
  }
}

TEST_CASE("executions satisfy the transition and projection invariants") {
  Automaton buf = buffer();
  Rng rng(31);
  for (int round = 0; round < 20; ++round) {
    TimedTrace in = random_input_trace(buf.sig, 5, rng);
    Execution e = execute(buf, in, ChoicePolicy::random_choice(round));
    CHECK(e.states.size() == 6);
    CHECK(project_trace(e.actions, buf.sig.inputs) == in);
    CHECK(behavior_of(buf, e).channels() == buf.sig.external());
  }
}

TEST_CASE("choice policies replay deterministically") {
  Automaton fm = fair_merge();
  TimedTrace in = sum_trace(input1("i", {seq({1, 2}), seq({1})}), input1("j", {seq({2}), seq({2, 2})}));
  ChoicePolicy p = ChoicePolicy::random_choice(42);
  Execution a = execute(fm, in, p);
  Execution b = execute(fm, in, p);
  CHECK(format_trace(a.actions) == format_trace(b.actions));
}

TEST_CASE("exhaustive reactivity for the bounded builtins") {
  ReactivityReport fm = check_reactivity(fair_merge(), ReactivityMode::exhaustive, 100000);
  CHECK(fm.ok());
  CHECK(fm.exhaustive);
  CHECK(fm.probes == 49);  // (1 + 2 + 4)^2 bounded inputs, one state

  ReactivityReport nor = check_reactivity(nor_gate("a", "b", "o"), ReactivityMode::exhaustive, 100000);
  CHECK(nor.ok());
  CHECK(nor.probes == 98);  // two states
}

TEST_CASE("sampled reactivity for the unbounded builtins") {
  CHECK(check_reactivity(buffer(), ReactivityMode::sampled, 2000, 1).ok());
  CHECK(check_reactivity(queue_element("q0", {"q1"}), ReactivityMode::sampled, 2000, 2).ok());
}

TEST_CASE("a removed transition is reported as not reactive") {
  Automaton bad = broken_merge();
  ReactivityReport r = check_reactivity(bad, ReactivityMode::exhaustive, 100000);
  CHECK_FALSE(r.ok());
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->second.at("i") == seq({1}));
  CHECK(r.witness->second.at("j").empty());

  ReactivityReport sampled = check_reactivity(bad, ReactivityMode::sampled, 5000, 7);
  CHECK_FALSE(sampled.ok());
}

TEST_CASE("exhaustive mode requires the finiteness hints") {
  ReactivityReport r = check_reactivity(buffer(), ReactivityMode::exhaustive, 1000);
  CHECK(r.status == ReactivityReport::Status::budget_insufficient);
}

TEST_CASE("execute surfaces missing transitions as Stuck") {
  Automaton bad = broken_merge();
  TimedTrace in = sum_trace(input1("i", {seq({1})}), input1("j", {seq({})}));
  CHECK_THROWS_AS(execute(bad, in, ChoicePolicy::first_choice()), Stuck);
}

TEST_CASE("every builtin automaton passes the weak pulse check") {
  ChoicePolicy p = ChoicePolicy::enumerate(6);
  p.frontier_cap = 64;
  std::vector<Automaton> all = {fair_merge(), buffer(), nor_gate("a", "b", "o"),
                                queue_element("q0", {"q1"})};
  for (const auto& a : all) {
    PulseReport r = check_weak_pulse(a, 6, 60, p);
    CHECK_MESSAGE(r.ok, a.name);
  }
}

TEST_CASE("merge is weakly but not strongly pulse-driven") {
  Automaton fm = fair_merge();
  ChoicePolicy p = ChoicePolicy::enumerate(8);
  PulseReport weak = check_weak_pulse(fm, 8, 100, p);
  CHECK(weak.ok);
  PulseReport strong = check_strong_pulse(fm, {"i", "j"}, {"o"}, 8, 500, p);
  CHECK_FALSE(strong.ok);
  CHECK(!strong.witness.empty());
}

TEST_CASE("buffer is strongly pulse-driven on its full signature") {
  Automaton buf = buffer();
  ChoicePolicy p = ChoicePolicy::enumerate(8);
  p.frontier_cap = 128;
  CHECK(check_strong_pulse(buf, {"i"}, {"o"}, 8, 200, p).ok);
}

TEST_CASE("moore declarations verify by randomized probing") {
  Automaton buf = buffer();
  buf.moore[0].verified = false;
  MooreProbeReport r = verify_moore(buf, 0, 300, 5);
  CHECK(r.ok);
  CHECK(buf.moore[0].verified);

  // fair_merge is not moore on its whole signature.
  Automaton fm = fair_merge();
  fm.moore.push_back({{"i", "j"}, {"o"}, false});
  MooreProbeReport bad = verify_moore(fm, 0, 300, 5);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(fm.moore[0].verified);
}

TEST_CASE("trace membership accepts executed behavior and rejects impossibilities") {
  Automaton buf = buffer();
  TimedTrace in = input1("i", {seq({1, 2}), seq({}), seq({})});
  Execution e = execute(buf, in, ChoicePolicy::random_choice(9));
  CHECK(check_trace_membership(buf, behavior_of(buf, e), 10000) == Membership::accepted);

  // Output before its input: no transition emits from an empty buffer.
  TimedTrace bogus = sum_trace(input1("i", {seq({1})}), input1("o", {seq({1})}));
  CHECK(check_trace_membership(buf, bogus, 10000) == Membership::rejected);

  Automaton fm = fair_merge();
  TimedTrace flipped =
      sum_trace(sum_trace(input1("i", {seq({1})}), input1("j", {seq({2})})),
                input1("o", {MsgSeq{int_msg(2), int_msg(1)}}));
  CHECK(check_trace_membership(fm, flipped, 10000) == Membership::accepted);
}

TEST_CASE("membership reports inconclusive when the budget is exhausted") {
  Automaton fm = fair_merge();
  TimedTrace in = sum_trace(input1("i", {seq({1, 1, 1, 1})}), input1("j", {seq({2, 2, 2, 2})}));
  TimedTrace impossible = sum_trace(in, input1("o", {seq({9})}));
  CHECK(check_trace_membership(fm, impossible, 3) == Membership::inconclusive);
}

TEST_CASE("the stepper is execute tick by tick") {
  Automaton buf = buffer();
  TimedTrace in = input1("i", {seq({4}), seq({5}), seq({})});
  Execution e = execute(buf, in, ChoicePolicy::first_choice());
  Stepper st(buf, ChoicePolicy::first_choice(), buf.name);
  for (std::size_t n = 1; n <= 3; ++n) CHECK(st.step(in.tick(n)) == e.actions.tick(n));
}
