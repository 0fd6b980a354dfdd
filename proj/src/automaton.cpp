#include "tpa/automaton.hpp"

#include <algorithm>
#include <sstream>

#include "tpa/errors.hpp"

namespace tpa {

ChannelSet channels_union(const ChannelSet& a, const ChannelSet& b) {
  ChannelSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

ChannelSet channels_intersect(const ChannelSet& a, const ChannelSet& b) {
  ChannelSet out;
  for (const auto& c : a)
    if (b.count(c)) out.insert(c);
  return out;
}

ChannelSet channels_minus(const ChannelSet& a, const ChannelSet& b) {
  ChannelSet out;
  for (const auto& c : a)
    if (!b.count(c)) out.insert(c);
  return out;
}

bool channels_subset(const ChannelSet& a, const ChannelSet& b) {
  for (const auto& c : a)
    if (!b.count(c)) return false;
  return true;
}

ChannelSet PortSignature::all() const {
  return channels_union(channels_union(inputs, outputs), hidden);
}

ChannelSet PortSignature::external() const { return channels_union(inputs, outputs); }

void PortSignature::validate() const {
  for (const auto& c : inputs)
    if (outputs.count(c) || hidden.count(c)) throw IncompatibleSignatures(c);
  for (const auto& c : outputs)
    if (hidden.count(c)) throw IncompatibleSignatures(c);
}

ChoicePolicy ChoicePolicy::first_choice(std::uint64_t seed) {
  ChoicePolicy p;
  p.strategy = Strategy::first;
  p.seed = seed;
  return p;
}

ChoicePolicy ChoicePolicy::random_choice(std::uint64_t seed) {
  ChoicePolicy p;
  p.strategy = Strategy::uniform_random;
  p.seed = seed;
  return p;
}

ChoicePolicy ChoicePolicy::enumerate(std::size_t branch_limit, std::uint64_t seed) {
  ChoicePolicy p;
  p.strategy = Strategy::enumerate_all;
  p.seed = seed;
  p.branch_limit = branch_limit;
  return p;
}

bool Automaton::has_verified_moore(const ChannelSet& g, const ChannelSet& p) const {
  for (const auto& d : moore)
    if (d.verified && channels_subset(g, d.g) && channels_subset(p, d.p)) return true;
  return false;
}

const MooreDecl* Automaton::usable_moore(const ChannelSet& needed_outputs) const {
  const MooreDecl* best = nullptr;
  for (const auto& d : moore) {
    if (!d.verified || !channels_subset(needed_outputs, d.p)) continue;
    if (!best || d.g.size() > best->g.size()) best = &d;
  }
  return best;
}

TimedTrace behavior_of(const Automaton& a, const Execution& e) {
  return project_trace(e.actions, a.sig.external());
}

namespace {

void check_transition_contract(const Automaton& a, const NamedSeq& input, const Transition& t) {
  if (t.action.domain() != a.sig.all())
    throw Error("automaton '" + a.name + "': transition action " + t.action.to_string() +
                " does not cover the full channel set");
  if (project(t.action, a.sig.inputs) != input)
    throw Error("automaton '" + a.name + "': transition input projection disagrees with input " +
                input.to_string());
}

std::optional<Transition> generic_select(const Automaton& a, const Value& state,
                                         const NamedSeq& input, const ChoiceCtx& ctx) {
  std::optional<Transition> chosen;
  if (ctx.policy.strategy == ChoicePolicy::Strategy::uniform_random) {
    Rng rng(derive_seed(ctx.policy.seed, ctx.path + "#pick", ctx.tick));
    std::size_t count = 0;
    a.transitions(state, input, [&](const Transition& t) {
      ++count;
      if (rng.below(count) == 0) chosen = t;
      return count < ctx.policy.enum_cap;
    });
  } else {
    a.transitions(state, input, [&](const Transition& t) {
      chosen = t;
      return false;
    });
  }
  return chosen;
}

Value pick_initial(const Automaton& a, const ChoiceCtx& ctx) {
  if (a.initial_states.empty()) throw Error("automaton '" + a.name + "' has no initial state");
  if (ctx.policy.strategy == ChoicePolicy::Strategy::uniform_random) {
    Rng rng(derive_seed(ctx.policy.seed, ctx.path + "#init", 0));
    return a.initial_states[rng.below(a.initial_states.size())];
  }
  return a.initial_states.front();
}

}  // namespace

std::optional<Transition> select_transition(const Automaton& a, const Value& state,
                                            const NamedSeq& input, const ChoiceCtx& ctx) {
  if (a.select) return a.select(state, input, ctx);
  return generic_select(a, state, input, ctx);
}

Execution execute(const Automaton& a, const TimedTrace& input, const ChoicePolicy& policy) {
  if (input.channels() != a.sig.inputs)
    throw ChannelMismatch("input trace channels do not match automaton '" + a.name + "' inputs");
  if (input.horizon() < 1) throw OutOfRange("execute requires horizon >= 1");

  ChoiceCtx ctx{policy, 0, a.name};
  Execution e;
  e.actions = TimedTrace(a.sig.all(), 0);
  e.states.push_back(pick_initial(a, ctx));
  for (std::size_t n = 1; n <= input.horizon(); ++n) {
    ctx.tick = n;
    const NamedSeq& in = input.tick(n);
    auto t = select_transition(a, e.states.back(), in, ctx);
    if (!t) throw Stuck(e.states.back().to_string(), in.to_string(), n);
    check_transition_contract(a, in, *t);
    e.actions.push_tick(t->action);
    e.states.push_back(t->next);
  }
  return e;
}

namespace {

using Frontier = std::set<std::pair<Value, TimedTrace>>;

/// Bounded deterministic frontier exploration: at most policy.branch_limit
/// alternatives per node per tick, at most policy.frontier_cap tracked
/// (state, external-prefix) pairs, truncated in set order.
Frontier explore(const Automaton& a, const TimedTrace& input, const ChoicePolicy& policy) {
  ChannelSet ext = a.sig.external();
  Frontier frontier;
  for (const auto& s : a.initial_states) frontier.insert({s, TimedTrace(ext, 0)});

  for (std::size_t n = 1; n <= input.horizon(); ++n) {
    const NamedSeq& in = input.tick(n);
    Frontier next;
    for (const auto& [state, trace] : frontier) {
      std::size_t branches = 0;
      a.transitions(state, in, [&](const Transition& t) {
        check_transition_contract(a, in, t);
        TimedTrace extended = trace;
        extended.push_tick(project(t.action, ext));
        next.insert({t.next, std::move(extended)});
        return ++branches < policy.branch_limit;
      });
      if (next.size() >= policy.frontier_cap * 2) break;
    }
    while (next.size() > policy.frontier_cap) next.erase(std::prev(next.end()));
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return frontier;
}

}  // namespace

std::set<TimedTrace> behaviors(const Automaton& a, const TimedTrace& input,
                               const ChoicePolicy& policy) {
  if (input.channels() != a.sig.inputs)
    throw ChannelMismatch("input trace channels do not match automaton '" + a.name + "' inputs");
  std::set<TimedTrace> out;
  for (const auto& [_, trace] : explore(a, input, policy)) out.insert(trace);
  return out;
}

Stepper::Stepper(Automaton a, ChoicePolicy policy, std::string path)
    : a_(std::move(a)), policy_(policy), path_(std::move(path)) {
  if (path_.empty()) path_ = a_.name;
  state_ = pick_initial(a_, ChoiceCtx{policy_, 0, path_});
}

NamedSeq Stepper::step(const NamedSeq& input) {
  if (input.domain() != a_.sig.inputs)
    throw ChannelMismatch("stepper input domain does not match automaton inputs");
  ChoiceCtx ctx{policy_, tick_, path_};
  auto t = select_transition(a_, state_, input, ctx);
  if (!t) throw Stuck(state_.to_string(), input.to_string(), tick_);
  check_transition_contract(a_, input, *t);
  state_ = t->next;
  ++tick_;
  return t->action;
}

// ---------------------------------------------------------------------------
// Random inputs
// ---------------------------------------------------------------------------

namespace {

const MsgSeq& generic_pool() {
  static const MsgSeq pool = {int_msg(0), int_msg(1), int_msg(2), int_msg(3)};
  return pool;
}

MsgSeq random_seq(const PortSignature& sig, const std::string& channel, Rng& rng,
                  std::size_t len_cap) {
  auto it = sig.alphabet.find(channel);
  const MsgSeq& pool = (it != sig.alphabet.end() && !it->second.empty()) ? it->second : generic_pool();
  MsgSeq out;
  std::size_t len = rng.geometric_len(len_cap);
  for (std::size_t i = 0; i < len; ++i) out.push_back(pool[rng.below(pool.size())]);
  return out;
}

}  // namespace

NamedSeq random_input(const PortSignature& sig, Rng& rng, std::size_t len_cap) {
  NamedSeq in = NamedSeq::empty_on(sig.inputs);
  for (const auto& c : sig.inputs) in.set(c, random_seq(sig, c, rng, len_cap));
  return in;
}

TimedTrace random_input_trace(const PortSignature& sig, std::size_t horizon, Rng& rng,
                              std::size_t len_cap) {
  TimedTrace out(sig.inputs, horizon);
  for (std::size_t n = 1; n <= horizon; ++n) out.set_tick(n, random_input(sig, rng, len_cap));
  return out;
}

// ---------------------------------------------------------------------------
// Reactivity
// ---------------------------------------------------------------------------

namespace {

bool has_transition(const Automaton& a, const Value& state, const NamedSeq& input) {
  bool found = false;
  a.transitions(state, input, [&](const Transition&) {
    found = true;
    return false;
  });
  return found;
}

/// All input assignments with per-channel sequences over the alphabet of
/// length <= bound. Enumerates via `fn`; returns false when aborted.
bool enumerate_bounded_inputs(const Automaton& a, const std::function<bool(const NamedSeq&)>& fn) {
  std::vector<std::string> chans(a.sig.inputs.begin(), a.sig.inputs.end());
  std::vector<std::vector<MsgSeq>> options;
  for (const auto& c : chans) {
    const MsgSeq& pool = a.sig.alphabet.at(c);
    std::size_t bound = a.bound_hint.at(c);
    std::vector<MsgSeq> frontier = {MsgSeq{}};
    std::vector<MsgSeq> all = {MsgSeq{}};
    for (std::size_t len = 1; len <= bound; ++len) {
      std::vector<MsgSeq> next;
      for (const auto& s : frontier)
        for (const auto& m : pool) {
          MsgSeq e = s;
          e.push_back(m);
          next.push_back(e);
        }
      all.insert(all.end(), next.begin(), next.end());
      frontier = std::move(next);
    }
    options.push_back(std::move(all));
  }
  std::vector<std::size_t> idx(chans.size(), 0);
  while (true) {
    NamedSeq in;
    for (std::size_t i = 0; i < chans.size(); ++i) in.set(chans[i], options[i][idx[i]]);
    if (!fn(in)) return false;
    std::size_t i = 0;
    for (; i < chans.size(); ++i) {
      if (++idx[i] < options[i].size()) break;
      idx[i] = 0;
    }
    if (i == chans.size()) return true;
    if (chans.empty()) return true;
  }
}

}  // namespace

ReactivityReport check_reactivity(const Automaton& a, ReactivityMode mode, std::size_t budget,
                                  std::uint64_t seed) {
  ReactivityReport r;
  if (mode == ReactivityMode::exhaustive) {
    r.exhaustive = true;
    if (!a.state_hint) {
      r.status = ReactivityReport::Status::budget_insufficient;
      r.detail = "exhaustive mode requires a finite state hint";
      return r;
    }
    for (const auto& c : a.sig.inputs) {
      if (!a.bound_hint.count(c) || !a.sig.alphabet.count(c) || a.sig.alphabet.at(c).empty()) {
        r.status = ReactivityReport::Status::budget_insufficient;
        r.detail = "exhaustive mode requires bound_hint and alphabet on input '" + c + "'";
        return r;
      }
    }
    for (const auto& state : *a.state_hint) {
      bool done = enumerate_bounded_inputs(a, [&](const NamedSeq& in) {
        ++r.probes;
        if (r.probes > budget) {
          r.status = ReactivityReport::Status::budget_insufficient;
          r.detail = "combination count exceeds budget";
          return false;
        }
        if (!has_transition(a, state, in)) {
          r.status = ReactivityReport::Status::not_reactive;
          r.witness = {state, in};
          return false;
        }
        return true;
      });
      if (!done) return r;
    }
    return r;
  }

  // Sampled: random walks from the initial states, probed along the way.
  Rng rng(derive_seed(seed, "reactivity"));
  std::size_t probes = 0;
  while (probes < budget) {
    Value state = a.initial_states[rng.below(a.initial_states.size())];
    std::size_t walk = rng.below(8);
    for (std::size_t i = 0; i <= walk && probes < budget; ++i) {
      NamedSeq in = random_input(a.sig, rng);
      ++probes;
      std::optional<Transition> t;
      a.transitions(state, in, [&](const Transition& tr) {
        t = tr;
        return false;
      });
      if (!t) {
        r.status = ReactivityReport::Status::not_reactive;
        r.witness = {state, in};
        r.probes = probes;
        return r;
      }
      state = t->next;
    }
  }
  r.probes = probes;
  return r;
}

// ---------------------------------------------------------------------------
// Pulse-drivenness checks
// ---------------------------------------------------------------------------

namespace {

std::set<std::string> prefix_set(const std::set<TimedTrace>& traces, std::size_t n,
                                 const ChannelSet& proj) {
  std::set<std::string> out;
  for (const auto& t : traces) out.insert(format_trace(prefix(project_trace(t, proj), n)));
  return out;
}

/// Prefix exploration to the common tick n, then one uncapped-width expansion
/// with the (possibly differing) tick n+1, projected onto `proj`. Keeping the
/// final tick free of frontier truncation matters: truncation is keyed on
/// traces that mention the differing inputs and would otherwise drop
/// different elements on the two sides.
std::set<std::string> expanded_prefix_set(const Automaton& a, const TimedTrace& input,
                                          std::size_t n, const ChannelSet& proj,
                                          const ChoicePolicy& policy) {
  Frontier base = explore(a, prefix(input, n), policy);
  const NamedSeq& in = input.tick(n + 1);
  std::set<std::string> out;
  for (const auto& [state, trace] : base) {
    std::size_t branches = 0;
    a.transitions(state, in, [&](const Transition& t) {
      TimedTrace extended = trace;
      extended.push_tick(project(t.action, a.sig.external()));
      out.insert(format_trace(project_trace(extended, proj)));
      return ++branches < policy.branch_limit;
    });
  }
  return out;
}

std::string describe_mismatch(std::size_t n, const TimedTrace& iota, const TimedTrace& kappa,
                              const std::set<std::string>& lhs, const std::set<std::string>& rhs) {
  std::ostringstream out;
  out << "prefix sets differ at tick " << n << "\ninput A:\n"
      << format_trace(iota) << "input B:\n"
      << format_trace(kappa) << "behaviors A: " << lhs.size() << ", behaviors B: " << rhs.size();
  for (const auto& t : lhs)
    if (!rhs.count(t)) {
      out << "\nonly A:\n" << t;
      break;
    }
  for (const auto& t : rhs)
    if (!lhs.count(t)) {
      out << "\nonly B:\n" << t;
      break;
    }
  return out.str();
}

}  // namespace

PulseReport check_weak_pulse(const Automaton& a, std::size_t horizon, std::size_t samples,
                             const ChoicePolicy& policy) {
  PulseReport r;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(derive_seed(policy.seed, "weak#" + std::to_string(s)));
    std::size_t n = horizon == 0 ? 0 : rng.below(horizon);
    TimedTrace iota = random_input_trace(a.sig, n + 1, rng);
    TimedTrace kappa = iota;
    if (n + 1 <= kappa.horizon()) kappa.set_tick(n + 1, random_input(a.sig, rng));
    auto lhs = prefix_set(behaviors(a, prefix(iota, n), policy), n, a.sig.external());
    auto rhs = prefix_set(behaviors(a, prefix(kappa, n), policy), n, a.sig.external());
    ++r.samples;
    if (lhs != rhs) {
      r.ok = false;
      r.witness = describe_mismatch(n, iota, kappa, lhs, rhs);
      return r;
    }
  }
  return r;
}

PulseReport check_strong_pulse(const Automaton& a, const ChannelSet& g, const ChannelSet& p,
                               std::size_t horizon, std::size_t samples,
                               const ChoicePolicy& policy) {
  PulseReport r;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(derive_seed(policy.seed, "strong#" + std::to_string(s)));
    std::size_t n = horizon == 0 ? 0 : rng.below(horizon);
    TimedTrace iota = random_input_trace(a.sig, n + 1, rng);
    // Same history through n, same tail outside g, fresh draw on g at n+1.
    NamedSeq redraw = iota.tick(n + 1);
    NamedSeq fresh = random_input(a.sig, rng);
    for (const auto& c : g) redraw.set(c, fresh.get_or_empty(c));
    TimedTrace kappa = iota;
    kappa.set_tick(n + 1, redraw);
    auto lhs = expanded_prefix_set(a, iota, n, p, policy);
    auto rhs = expanded_prefix_set(a, kappa, n, p, policy);
    ++r.samples;
    if (lhs != rhs) {
      r.ok = false;
      r.witness = describe_mismatch(n + 1, iota, kappa, lhs, rhs);
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Trace membership
// ---------------------------------------------------------------------------

namespace {

struct MembershipSearch {
  const Automaton& a;
  const TimedTrace& trace;
  std::size_t budget;
  std::size_t used = 0;
  bool truncated = false;
  std::set<std::pair<std::size_t, Value>> failed;

  bool dfs(const Value& state, std::size_t t) {
    if (t > trace.horizon()) return true;
    if (failed.count({t, state})) return false;
    NamedSeq in = project(trace.tick(t), a.sig.inputs);
    NamedSeq out = project(trace.tick(t), a.sig.outputs);
    bool found = false;
    a.transitions(state, in, [&](const Transition& tr) {
      if (++used > budget) {
        truncated = true;
        return false;
      }
      if (project(tr.action, a.sig.outputs) == out && dfs(tr.next, t + 1)) {
        found = true;
        return false;
      }
      return true;
    });
    if (!found && !truncated) failed.insert({t, state});
    return found;
  }
};

}  // namespace

Membership check_trace_membership(const Automaton& a, const TimedTrace& trace, std::size_t budget) {
  if (trace.channels() != a.sig.external())
    throw ChannelMismatch("membership trace must cover exactly the external channels");
  MembershipSearch search{a, trace, budget, 0, false, {}};
  for (const auto& s0 : a.initial_states) {
    if (search.dfs(s0, 1)) return Membership::accepted;
    if (search.truncated) return Membership::inconclusive;
  }
  return Membership::rejected;
}

// ---------------------------------------------------------------------------
// Moore-declaration verification
// ---------------------------------------------------------------------------

namespace {

std::set<std::string> projection_alternatives(const Automaton& a, const Value& state,
                                              const NamedSeq& input, const ChannelSet& p,
                                              std::size_t cap) {
  std::set<std::string> out;
  std::size_t seen = 0;
  a.transitions(state, input, [&](const Transition& t) {
    out.insert(project(t.action, p).to_string());
    return ++seen < cap;
  });
  return out;
}

}  // namespace

MooreProbeReport verify_moore(Automaton& a, std::size_t decl_index, std::size_t probes,
                              std::uint64_t seed, std::size_t walk_horizon) {
  if (decl_index >= a.moore.size()) throw OutOfRange("no moore declaration at that index");
  MooreDecl& decl = a.moore[decl_index];
  MooreProbeReport r;
  Rng rng(derive_seed(seed, "moore#" + std::to_string(decl_index)));
  for (std::size_t i = 0; i < probes; ++i) {
    Value state = a.initial_states[rng.below(a.initial_states.size())];
    std::size_t walk = rng.below(walk_horizon + 1);
    for (std::size_t k = 0; k < walk; ++k) {
      NamedSeq in = random_input(a.sig, rng);
      std::optional<Transition> t;
      a.transitions(state, in, [&](const Transition& tr) {
        t = tr;
        return false;
      });
      if (!t) break;
      state = t->next;
    }
    NamedSeq x = random_input(a.sig, rng);
    NamedSeq y = x;
    NamedSeq fresh = random_input(a.sig, rng);
    for (const auto& c : decl.g) y.set(c, fresh.get_or_empty(c));
    ++r.probes;
    auto px = projection_alternatives(a, state, x, decl.p, 512);
    auto py = projection_alternatives(a, state, y, decl.p, 512);
    if (px != py) {
      r.ok = false;
      std::ostringstream out;
      out << "projection sets differ in state " << state.to_string() << " for inputs "
          << x.to_string() << " vs " << y.to_string();
      r.witness = out.str();
      return r;
    }
  }
  decl.verified = true;
  return r;
}

}  // namespace tpa
