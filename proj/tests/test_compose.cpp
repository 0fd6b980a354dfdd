#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tpa/builtins.hpp"
#include "tpa/compose.hpp"
#include "tpa/errors.hpp"

#include "helpers.hpp"

using namespace tpa;
using namespace tpatest;

namespace {

PortSignature sig_of(std::initializer_list<std::string> in, std::initializer_list<std::string> out,
                     std::initializer_list<std::string> hid = {}) {
  PortSignature s;
  s.inputs = ChannelSet(in);
  s.outputs = ChannelSet(out);
  s.hidden = ChannelSet(hid);
  return s;
}

std::set<std::string> trace_keys(const std::set<TimedTrace>& ts) {
  std::set<std::string> out;
  for (const auto& t : ts) out.insert(format_trace(t));
  return out;
}

std::set<std::string> projected_keys(const std::set<TimedTrace>& ts, const ChannelSet& onto) {
  std::set<std::string> out;
  for (const auto& t : ts) out.insert(format_trace(project_trace(t, onto)));
  return out;
}

}  // namespace

TEST_CASE("signature composition connects matching channels") {
  PortSignature s = compose_signatures(sig_of({"i"}, {"m"}), sig_of({"m"}, {"o"}));
  CHECK(s.inputs == ChannelSet{"i"});
  CHECK(s.outputs == ChannelSet{"m", "o"});
  CHECK(s.hidden.empty());

  PortSignature disj = compose_signatures(sig_of({"a"}, {"b"}), sig_of({"c"}, {"d"}));
  CHECK(disj.inputs == ChannelSet{"a", "c"});
  CHECK(disj.outputs == ChannelSet{"b", "d"});

  CHECK_THROWS_AS(compose_signatures(sig_of({"i"}, {"o"}), sig_of({"j"}, {"o"})),
                  IncompatibleSignatures);
  CHECK_THROWS_AS(compose_signatures(sig_of({"i"}, {"o"}, {"h"}), sig_of({"h"}, {"p"})),
                  IncompatibleSignatures);
}

TEST_CASE("the mutually dependent pair is refused, forcing yields Stuck at tick 1") {
  Automaton a1 = prepend_one("i", "o");
  Automaton a2 = prepend_one("o", "i");
  CHECK_THROWS_AS(compose2(a1, a2), PotentialBlocking);

  Automaton forced = compose2(a1, a2, true);
  CHECK(forced.sig.inputs.empty());
  CHECK(forced.sig.outputs == ChannelSet{"i", "o"});
  TimedTrace in(forced.sig.inputs, 3);
  try {
    execute(forced, in, ChoicePolicy::first_choice());
    CHECK(false);
  } catch (const Stuck& e) {
    CHECK(e.tick == 1);
  }
}

TEST_CASE("merge into buffer composes as a pipeline") {
  Automaton fm = fair_merge("i", "j", "m");
  Automaton buf = buffer("m", "o");
  Automaton piped = compose2(fm, buf);
  CHECK(piped.sig.inputs == ChannelSet{"i", "j"});
  CHECK(piped.sig.outputs == ChannelSet{"m", "o"});

  TimedTrace in = sum_trace(input1("i", {seq({1}), seq({}), seq({})}),
                            input1("j", {seq({2}), seq({}), seq({})}));
  std::set<TimedTrace> behs = behaviors(piped, in, ChoicePolicy::enumerate(32));

  // Independent expectation: every merge order of (1, 2), each followed by
  // the buffer's forced-emission splits of that order.
  std::set<std::string> expected;
  for (MsgSeq merged : {MsgSeq{int_msg(1), int_msg(2)}, MsgSeq{int_msg(2), int_msg(1)}}) {
    TimedTrace buffered = input1("m", {merged, seq({}), seq({})});
    for (const auto& column : buffer_oracle(buffered)) expected.insert(render_seq(merged) + "/" + column);
  }
  std::set<std::string> got;
  for (const auto& b : behs)
    got.insert(render_seq(b.tick(1).at("m")) + "/" + render_output_column(project_trace(b, {"o"}), "o"));
  CHECK(got == expected);
}

TEST_CASE("executions of a composition project to member executions") {
  Automaton fm = fair_merge("i", "j", "m");
  Automaton buf = buffer("m", "o");
  Automaton piped = compose2(fm, buf);
  Rng rng(17);
  for (int round = 0; round < 25; ++round) {
    TimedTrace in = random_input_trace(piped.sig, 5, rng);
    Execution e = execute(piped, in, ChoicePolicy::random_choice(round));
    TimedTrace beh = behavior_of(piped, e);
    CHECK(check_trace_membership(fm, project_trace(beh, fm.sig.external()), 20000) ==
          Membership::accepted);
    CHECK(check_trace_membership(buf, project_trace(beh, buf.sig.external()), 20000) ==
          Membership::accepted);
  }
}

TEST_CASE("gluing member behaviors that agree on the shared channel is accepted") {
  Automaton fm = fair_merge("i", "j", "m");
  Automaton buf = buffer("m", "o");
  Automaton piped = compose2(fm, buf);
  Rng rng(71);
  for (int round = 0; round < 15; ++round) {
    // Run the merge free-standing, feed its output into a free-standing
    // buffer, then check the glued trace against the composition.
    TimedTrace in = random_input_trace(fm.sig, 4, rng);
    Execution me = execute(fm, in, ChoicePolicy::random_choice(round));
    TimedTrace merged = project_trace(me.actions, {"m"});
    Execution be = execute(buf, merged, ChoicePolicy::random_choice(round + 100));
    TimedTrace glued = sum_trace(me.actions, project_trace(be.actions, {"o"}));
    CHECK(check_trace_membership(piped, glued, 50000) == Membership::accepted);
  }
}

TEST_CASE("two fully moore members compose to a fully moore automaton") {
  Automaton g1 = nor_gate("a1", "b1", "o1");
  Automaton g2 = nor_gate("o1", "x", "o2");  // reads gate 1's line
  Automaton c = compose2(g1, g2);
  CHECK(c.has_verified_moore(c.sig.inputs, c.sig.outputs));

  ChoicePolicy p = ChoicePolicy::enumerate(8);
  CHECK(check_strong_pulse(c, c.sig.inputs, c.sig.outputs, 8, 200, p).ok);
}

TEST_CASE("hiding reclassifies outputs and drops them from behaviors") {
  Automaton fm = fair_merge("i", "j", "m");
  Automaton buf = buffer("m", "o");
  Automaton piped = compose2(fm, buf);

  CHECK(hide(piped, {}).sig.outputs == piped.sig.outputs);
  CHECK_THROWS_AS(hide(piped, {"i"}), NotAnOutput);

  Automaton hidden = hide(piped, {"m"});
  CHECK(hidden.sig.outputs == ChannelSet{"o"});
  CHECK(hidden.sig.hidden == ChannelSet{"m"});

  TimedTrace in = sum_trace(input1("i", {seq({1}), seq({})}), input1("j", {seq({2}), seq({})}));
  ChoicePolicy p = ChoicePolicy::enumerate(32);
  std::set<TimedTrace> via_hide = behaviors(hidden, in, p);
  std::set<std::string> expected = projected_keys(behaviors(piped, in, p), hidden.sig.external());
  CHECK(trace_keys(via_hide) == expected);
}

TEST_CASE("tick plans order pipelines and break moore feedback") {
  FamilySpec pipeline;
  pipeline.members.push_back({"A", fair_merge("i", "j", "x"), true});
  pipeline.members.push_back({"B", buffer("x", "y"), true});
  pipeline.members.push_back({"C", buffer("y", "z"), true});
  TickPlan plan = plan_tick(pipeline);
  // The buffers defer their feedback input behind their moore declaration,
  // so nothing constrains the order and all members share one stage.
  CHECK(plan.stages.size() == 1);
  CHECK(plan.broken_edges.size() == 2);

  // Directly wired nor gates: both edges are moore-broken, single stage.
  FamilySpec gates;
  gates.members.push_back({"g1", nor_gate("a1", "o2", "o1"), true});
  gates.members.push_back({"g2", nor_gate("a2", "o1", "o2"), true});
  TickPlan gp = plan_tick(gates);
  CHECK(gp.stages.size() == 1);
  CHECK(gp.stages[0] == std::vector<std::string>{"g1", "g2"});
  CHECK(gp.broken_edges.size() == 2);
  CHECK(gp.forced.empty());

  // The blocking pair has a cycle and no moore edge.
  FamilySpec blocked;
  blocked.members.push_back({"p1", prepend_one("i", "o"), true});
  blocked.members.push_back({"p2", prepend_one("o", "i"), true});
  CHECK_THROWS_WITH_AS(plan_tick(blocked), doctest::Contains("p1"), PotentialBlocking);
}

TEST_CASE("a pipeline without moore declarations still plans in stages") {
  FamilySpec pipeline;
  Automaton head = fair_merge("i", "j", "x");
  Automaton tail = fair_merge("x", "k", "z");
  pipeline.members.push_back({"head", head, true});
  pipeline.members.push_back({"tail", tail, true});
  TickPlan plan = plan_tick(pipeline);
  REQUIRE(plan.stages.size() == 2);
  CHECK(plan.stages[0] == std::vector<std::string>{"head"});
  CHECK(plan.stages[1] == std::vector<std::string>{"tail"});

  Automaton c = compose_family(pipeline);
  TimedTrace in(c.sig.inputs, 2);
  CHECK(project_trace(execute(c, in, ChoicePolicy::first_choice()).actions, c.sig.inputs)
            .horizon() == 2);
}

TEST_CASE("independent members compose to a plain product") {
  FamilySpec f;
  f.members.push_back({"m1", fair_merge("i1", "j1", "o1"), true});
  f.members.push_back({"m2", fair_merge("i2", "j2", "o2"), true});
  Automaton c = compose_family(f);
  CHECK(c.sig.inputs == ChannelSet{"i1", "j1", "i2", "j2"});

  TimedTrace in(c.sig.inputs, 1);
  NamedSeq tick = NamedSeq::empty_on(c.sig.inputs);
  tick.set("i1", seq({1}));
  tick.set("j1", seq({2}));
  tick.set("i2", seq({3}));
  tick.set("j2", seq({4}));
  in.set_tick(1, tick);
  std::set<TimedTrace> behs = behaviors(c, in, ChoicePolicy::enumerate(16));
  CHECK(behs.size() == 4);  // two interleavings per independent merge
}

TEST_CASE("duplicate outputs across members are refused") {
  FamilySpec f;
  f.members.push_back({"m1", fair_merge("i1", "j1", "o"), true});
  f.members.push_back({"m2", fair_merge("i2", "j2", "o"), true});
  CHECK_THROWS_AS(compose_family(f), IncompatibleSignatures);
}

TEST_CASE("a finite family equals iterated binary composition on sampled inputs") {
  auto family = [] {
    FamilySpec f;
    f.members.push_back({"fm", fair_merge("i", "j", "m"), true});
    f.members.push_back({"b1", buffer("m", "o"), true});
    f.members.push_back({"b2", buffer("o", "p"), true});
    return f;
  }();
  Automaton whole = compose_family(family);
  Automaton iterated = compose2(compose2(fair_merge("i", "j", "m"), buffer("m", "o")),
                                buffer("o", "p"));
  CHECK(whole.sig.inputs == iterated.sig.inputs);
  CHECK(whole.sig.outputs == iterated.sig.outputs);

  // Small inputs and generous caps keep the enumeration complete, so the
  // behavior sets must be equal, not just overlapping.
  Rng rng(13);
  ChoicePolicy p = ChoicePolicy::enumerate(4096);
  p.frontier_cap = 8192;
  for (int round = 0; round < 8; ++round) {
    TimedTrace in = random_input_trace(whole.sig, 3, rng, 2);
    CHECK(trace_keys(behaviors(whole, in, p)) == trace_keys(behaviors(iterated, in, p)));
  }
}

TEST_CASE("composition is associative at the behavior level (hiding applied last)") {
  auto a = [] { return fair_merge("i", "j", "m"); };
  auto b = [] { return buffer("m", "o"); };
  auto c = [] { return buffer("o", "p"); };
  Automaton left = compose2(compose2(a(), b()), c());
  Automaton right = compose2(a(), compose2(b(), c()));
  Rng rng(29);
  ChoicePolicy p = ChoicePolicy::enumerate(4096);
  p.frontier_cap = 8192;
  for (int round = 0; round < 8; ++round) {
    TimedTrace in = random_input_trace(left.sig, 3, rng, 2);
    CHECK(trace_keys(behaviors(left, in, p)) == trace_keys(behaviors(right, in, p)));
  }
}

TEST_CASE("member choices are split by member, so adding one does not perturb others") {
  FamilySpec small;
  small.members.push_back({"fm", fair_merge("i", "j", "m"), true});
  FamilySpec big = small;
  big.members.push_back({"fm2", fair_merge("k", "l", "n"), true});

  Automaton c1 = compose_family(small);
  Automaton c2 = compose_family(big);
  TimedTrace in1(c1.sig.inputs, 3);
  TimedTrace in2(c2.sig.inputs, 3);
  for (std::size_t n = 1; n <= 3; ++n) {
    NamedSeq t1 = NamedSeq::empty_on(c1.sig.inputs);
    t1.set("i", seq({1, 2}));
    t1.set("j", seq({3, 4}));
    in1.set_tick(n, t1);
    NamedSeq t2 = NamedSeq::empty_on(c2.sig.inputs);
    t2.set("i", seq({1, 2}));
    t2.set("j", seq({3, 4}));
    in2.set_tick(n, t2);
  }
  ChoicePolicy p = ChoicePolicy::random_choice(99);
  TimedTrace big_run = project_trace(execute(c2, in2, p).actions, {"m"});
  TimedTrace small_run = project_trace(execute(c1, in1, p).actions, {"m"});
  CHECK(format_trace(big_run) == format_trace(small_run));
}

TEST_CASE("lazy members hold their initial state until addressed") {
  FamilySpec f;
  f.members.push_back({"src", buffer("i", "x"), true});
  f.members.push_back({"snk", buffer("x", "o"), false});  // created by traffic
  Automaton c = compose_family(f);

  TimedTrace in = input1("i", {seq({}), seq({5}), seq({}), seq({})});
  Execution e = execute(c, in, ChoicePolicy::first_choice());
  // Family states list only live members: the sink materializes at tick 3,
  // when the source's emission reaches it.
  CHECK(e.states[0].as_list().size() == 1);
  CHECK(e.states[1].as_list().size() == 1);
  CHECK(e.states[2].as_list().size() == 1);
  CHECK(e.states[3].as_list().size() == 2);
  CHECK(e.actions.tick(4).at("o") == seq({5}));
}

TEST_CASE("a lazy member with several initial states is rejected") {
  FamilySpec f;
  f.members.push_back({"src", buffer("i", "x"), true});
  f.members.push_back({"gate", nor_gate("x", "y", "o"), false});
  CHECK_THROWS_AS(compose_family(f), Error);
}
