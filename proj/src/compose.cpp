#include "tpa/compose.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

#include "tpa/errors.hpp"

namespace tpa {

namespace {

// ---------------------------------------------------------------------------
// Family state codec: live members only, as a list of [id, state] pairs
// sorted by id. Non-live members implicitly hold their unique initial state.
// ---------------------------------------------------------------------------

Value fam_entry(const std::string& id, const Value& state) {
  return Value(Value::List{Value(id), state});
}

Value fam_state_from(const std::vector<std::pair<std::string, Value>>& live) {
  Value::List entries;
  for (const auto& [id, st] : live) entries.push_back(fam_entry(id, st));
  std::sort(entries.begin(), entries.end());
  return Value(std::move(entries));
}

const Value* fam_state_find(const Value& fs, const std::string& id) {
  for (const auto& e : fs.as_list()) {
    const auto& pair = e.as_list();
    if (pair[0].as_str() == id) return &pair[1];
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Core: everything the composed generator needs, shared by copies
// ---------------------------------------------------------------------------

struct MemberInfo {
  std::string id;
  Automaton a;
  bool live0 = true;
  ChannelSet feedback_in;    // inputs produced inside the family
  ChannelSet consumed_out;   // outputs some member consumes
  ChannelSet deferred;       // inputs this member may read after publishing
  ChannelSet publish;        // outputs fixed in phase 1 (= the decl's p)
  bool two_phase = false;
};

struct Event {
  enum class Kind { publish, enumerate, fixpoint, resolve };
  Kind kind;
  std::size_t member = 0;  // unused for fixpoint
};

struct FamilyCore {
  std::string name;
  std::vector<MemberInfo> members;
  PortSignature sig;
  std::vector<Event> schedule;
  std::vector<std::size_t> forced;  // members solved by fixed-point iteration
  std::size_t max_live = 0;
};

std::string cycle_description(const std::vector<const MemberInfo*>& cycle) {
  std::ostringstream out;
  out << "feedback cycle with no moore edge: ";
  for (std::size_t i = 0; i < cycle.size(); ++i) out << (i ? " -> " : "") << cycle[i]->id;
  return out.str();
}

/// Builds member metadata, the stage order and the event schedule.
/// Populates `plan` when given (plan_tick) and throws PotentialBlocking when a
/// cycle survives and force is off.
std::shared_ptr<FamilyCore> build_core(const FamilySpec& f, TickPlan* plan) {
  if (f.members.empty()) throw Error("compose_family: empty member list");
  auto core = std::make_shared<FamilyCore>();
  core->name = f.name.empty() ? "family" : f.name;
  core->max_live = f.max_live;

  std::set<std::string> ids;
  ChannelSet all_outputs, all_inputs;
  for (const auto& m : f.members) {
    if (!ids.insert(m.id).second) throw Error("duplicate member id '" + m.id + "'");
    m.automaton.sig.validate();
    all_inputs = channels_union(all_inputs, m.automaton.sig.inputs);
  }
  // Pairwise compatibility: outputs are private, hidden channels are invisible.
  for (std::size_t j = 0; j < f.members.size(); ++j) {
    const auto& sj = f.members[j].automaton.sig;
    for (std::size_t k = j + 1; k < f.members.size(); ++k) {
      const auto& sk = f.members[k].automaton.sig;
      for (const auto& c : channels_intersect(sj.outputs, sk.outputs)) throw IncompatibleSignatures(c);
      for (const auto& c : channels_intersect(sj.hidden, sk.all())) throw IncompatibleSignatures(c);
      for (const auto& c : channels_intersect(sk.hidden, sj.all())) throw IncompatibleSignatures(c);
    }
    all_outputs = channels_union(all_outputs, sj.outputs);
  }

  // Composed signature: internal channels stay outputs until hidden.
  for (const auto& m : f.members) {
    core->sig.outputs = channels_union(core->sig.outputs, m.automaton.sig.outputs);
    core->sig.hidden = channels_union(core->sig.hidden, m.automaton.sig.hidden);
  }
  core->sig.inputs = channels_minus(all_inputs, all_outputs);
  core->sig.validate();
  for (const auto& m : f.members)
    for (const auto& [c, pool] : m.automaton.sig.alphabet) core->sig.alphabet.emplace(c, pool);

  for (const auto& m : f.members) {
    MemberInfo info;
    info.id = m.id;
    info.a = m.automaton;
    info.live0 = m.live_at_start;
    info.feedback_in = channels_intersect(m.automaton.sig.inputs, all_outputs);
    info.consumed_out = channels_intersect(m.automaton.sig.outputs, all_inputs);
    if (const MooreDecl* d = info.a.usable_moore(info.consumed_out)) {
      info.deferred = channels_intersect(info.feedback_in, d->g);
      info.publish = d->p;
      info.two_phase = !info.deferred.empty();
    }
    if (!info.live0 && info.a.initial_states.size() != 1)
      throw Error("lazily created member '" + m.id + "' must have exactly one initial state");
    core->members.push_back(std::move(info));
  }

  // Hard dependency edges: producer -> consumer, minus deferred channels.
  std::map<std::string, std::size_t> producer;
  for (std::size_t j = 0; j < core->members.size(); ++j)
    for (const auto& c : core->members[j].a.sig.outputs) producer[c] = j;

  std::vector<std::set<std::size_t>> succ(core->members.size());
  std::vector<std::size_t> indeg(core->members.size(), 0);
  for (std::size_t j = 0; j < core->members.size(); ++j) {
    auto& mj = core->members[j];
    ChannelSet hard = channels_minus(mj.feedback_in, mj.deferred);
    std::set<std::size_t> preds;
    for (const auto& c : hard) preds.insert(producer.at(c));
    for (auto k : preds)
      if (succ[k].insert(j).second) ++indeg[j];
    if (plan) {
      // Report which feedback edges a moore declaration breaks.
      std::map<std::size_t, ChannelSet> broken_by;
      for (const auto& c : mj.deferred) broken_by[producer.at(c)].insert(c);
      for (auto& [k, chans] : broken_by)
        plan->broken_edges.push_back({core->members[k].id, mj.id, chans});
    }
  }

  // Kahn layering.
  std::vector<bool> placed(core->members.size(), false);
  std::vector<std::vector<std::size_t>> stages;
  std::size_t placed_count = 0;
  while (placed_count < core->members.size()) {
    std::vector<std::size_t> layer;
    for (std::size_t j = 0; j < core->members.size(); ++j)
      if (!placed[j] && indeg[j] == 0) layer.push_back(j);
    if (layer.empty()) break;
    std::sort(layer.begin(), layer.end(), [&](std::size_t x, std::size_t y) {
      return core->members[x].id < core->members[y].id;
    });
    for (auto j : layer) {
      placed[j] = true;
      ++placed_count;
      for (auto k : succ[j]) --indeg[k];
    }
    stages.push_back(std::move(layer));
  }

  if (placed_count < core->members.size()) {
    std::vector<const MemberInfo*> cycle;
    for (std::size_t j = 0; j < core->members.size(); ++j)
      if (!placed[j]) {
        cycle.push_back(&core->members[j]);
        core->forced.push_back(j);
      }
    if (!f.force) throw PotentialBlocking(cycle_description(cycle));
  }

  for (const auto& layer : stages)
    for (auto j : layer)
      core->schedule.push_back({core->members[j].two_phase ? Event::Kind::publish
                                                           : Event::Kind::enumerate,
                                j});
  if (!core->forced.empty()) core->schedule.push_back({Event::Kind::fixpoint, 0});
  for (std::size_t j = 0; j < core->members.size(); ++j)
    if (core->members[j].two_phase && placed[j]) core->schedule.push_back({Event::Kind::resolve, j});

  if (plan) {
    for (const auto& layer : stages) {
      std::vector<std::string> names;
      for (auto j : layer) names.push_back(core->members[j].id);
      plan->stages.push_back(std::move(names));
    }
    for (auto j : core->forced) plan->forced.push_back(core->members[j].id);
  }
  return core;
}

// ---------------------------------------------------------------------------
// The per-tick walk: shared by the joint generator and the policy chooser
// ---------------------------------------------------------------------------

struct Walk {
  const FamilyCore& core;
  NamedSeq net_input;

  enum class Mode { all, policy };
  Mode mode = Mode::all;
  ChoiceCtx ctx;  // policy mode only

  TransitionSink emit;
  bool stop = false;

  std::vector<bool> live, newly_live;
  std::vector<Value> state;
  std::vector<std::optional<NamedSeq>> published;
  std::vector<std::optional<Transition>> chosen;
  std::map<std::string, MsgSeq> channel;  // resolved contents this tick

  Walk(const FamilyCore& c, const Value& fam_state, NamedSeq input)
      : core(c), net_input(std::move(input)) {
    std::size_t n = core.members.size();
    live.assign(n, false);
    newly_live.assign(n, false);
    published.assign(n, std::nullopt);
    chosen.assign(n, std::nullopt);
    state.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& m = core.members[j];
      if (const Value* st = fam_state_find(fam_state, m.id)) {
        live[j] = true;
        state[j] = *st;
      } else {
        state[j] = m.a.initial_states.front();
      }
    }
    for (const auto& [c, seq] : net_input.entries()) channel[c] = seq;
  }

  bool known(const std::string& c) const { return channel.count(c) != 0; }

  NamedSeq assemble_input(std::size_t j, bool placeholders) const {
    const auto& m = core.members[j];
    NamedSeq in;
    for (const auto& c : m.a.sig.inputs) {
      auto it = channel.find(c);
      if (it != channel.end()) {
        in.set(c, it->second);
      } else if (placeholders && m.deferred.count(c)) {
        in.set(c, {});
      } else {
        throw Error("composition scheduler: channel '" + c + "' unresolved for member '" + m.id +
                    "'");
      }
    }
    return in;
  }

  void record(const ChannelSet& chans, const NamedSeq& from) {
    for (const auto& c : chans) channel[c] = from.get_or_empty(c);
  }

  void unrecord(const ChannelSet& chans) {
    for (const auto& c : chans) channel.erase(c);
  }

  /// Iterates the selected alternatives of one event. In `all` mode every
  /// alternative (up to enum_cap) is visited; in policy mode exactly one.
  template <typename Alt>
  void for_selected(std::vector<Alt> alts, const std::string& label,
                    const std::function<void(const Alt&)>& descend) {
    if (alts.empty()) return;  // dead branch
    if (mode == Mode::policy) {
      std::size_t pick = 0;
      if (ctx.policy.strategy == ChoicePolicy::Strategy::uniform_random && alts.size() > 1) {
        Rng rng(derive_seed(ctx.policy.seed, ctx.path + "/" + label, ctx.tick));
        pick = rng.below(alts.size());
      }
      descend(alts[pick]);
      return;
    }
    for (const auto& alt : alts) {
      if (stop) return;
      descend(alt);
    }
  }

  std::vector<Transition> member_transitions(std::size_t j, const NamedSeq& in,
                                             const NamedSeq* must_match,
                                             const ChannelSet* match_on) const {
    std::vector<Transition> out;
    std::size_t cap = ctx.policy.enum_cap;
    if (mode == Mode::policy && ctx.policy.strategy == ChoicePolicy::Strategy::first) cap = 1;
    core.members[j].a.transitions(state[j], in, [&](const Transition& t) {
      if (!must_match || project(t.action, *match_on) == *must_match) out.push_back(t);
      return out.size() < cap;
    });
    return out;
  }

  void run(std::size_t event_idx) {
    if (stop) return;
    if (event_idx == core.schedule.size()) {
      finalize();
      return;
    }
    const Event& ev = core.schedule[event_idx];
    switch (ev.kind) {
      case Event::Kind::publish:
        do_publish(ev.member, event_idx);
        break;
      case Event::Kind::enumerate:
        do_enumerate(ev.member, event_idx);
        break;
      case Event::Kind::resolve:
        do_resolve(ev.member, event_idx);
        break;
      case Event::Kind::fixpoint:
        do_fixpoint(event_idx);
        break;
    }
  }

  void do_publish(std::size_t j, std::size_t event_idx) {
    const auto& m = core.members[j];
    if (!live[j]) {
      // Pre-live members emit nothing; consumers see empty sequences.
      NamedSeq eps = NamedSeq::empty_on(m.publish);
      published[j] = eps;
      record(m.publish, eps);
      run(event_idx + 1);
      unrecord(m.publish);
      published[j].reset();
      return;
    }
    NamedSeq in = assemble_input(j, true);
    std::vector<NamedSeq> alts;
    std::set<std::string> seen;
    std::size_t visited = 0;
    m.a.transitions(state[j], in, [&](const Transition& t) {
      NamedSeq proj = project(t.action, m.publish);
      if (seen.insert(proj.to_string()).second) alts.push_back(std::move(proj));
      return ++visited < ctx.policy.enum_cap;
    });
    for_selected<NamedSeq>(std::move(alts), m.id + "#publish", [&](const NamedSeq& proj) {
      published[j] = proj;
      record(m.publish, proj);
      run(event_idx + 1);
      unrecord(m.publish);
      published[j].reset();
    });
  }

  void do_enumerate(std::size_t j, std::size_t event_idx) {
    const auto& m = core.members[j];
    NamedSeq in = assemble_input(j, false);
    if (!live[j] && in.all_empty()) {
      record(m.a.sig.outputs, NamedSeq());  // holds: outputs stay empty
      run(event_idx + 1);
      unrecord(m.a.sig.outputs);
      return;
    }
    bool was_live = live[j];
    if (!was_live) {
      live[j] = true;
      newly_live[j] = true;
    }
    auto alts = member_transitions(j, in, nullptr, nullptr);
    for_selected<Transition>(std::move(alts), m.id + "#step", [&](const Transition& t) {
      chosen[j] = t;
      record(m.a.sig.outputs, t.action);
      run(event_idx + 1);
      unrecord(m.a.sig.outputs);
      chosen[j].reset();
    });
    if (!was_live) {
      live[j] = false;
      newly_live[j] = false;
    }
  }

  void do_resolve(std::size_t j, std::size_t event_idx) {
    const auto& m = core.members[j];
    NamedSeq in = assemble_input(j, false);
    if (!live[j] && in.all_empty()) {
      // Holds; phase 1 already recorded empty sequences on the published set.
      record(channels_minus(m.a.sig.outputs, m.publish), NamedSeq());
      run(event_idx + 1);
      unrecord(channels_minus(m.a.sig.outputs, m.publish));
      return;
    }
    bool was_live = live[j];
    if (!was_live) {
      live[j] = true;
      newly_live[j] = true;
    }
    auto alts = member_transitions(j, in, &*published[j], &m.publish);
    for_selected<Transition>(std::move(alts), m.id + "#resolve", [&](const Transition& t) {
      chosen[j] = t;
      record(channels_minus(m.a.sig.outputs, m.publish), t.action);
      run(event_idx + 1);
      unrecord(channels_minus(m.a.sig.outputs, m.publish));
      chosen[j].reset();
    });
    if (!was_live) {
      live[j] = false;
      newly_live[j] = false;
    }
  }

  /// Members in an unbroken cycle (force mode): bounded self-consistent
  /// iteration with first-choice selection. Produces at most one alternative;
  /// divergence makes the branch dead, which surfaces as Stuck upstream.
  void do_fixpoint(std::size_t event_idx) {
    std::map<std::string, MsgSeq> guess;
    for (auto j : core.forced)
      for (const auto& c : core.members[j].a.sig.outputs) guess[c] = {};

    constexpr std::size_t kMaxRounds = 8;
    std::vector<std::optional<Transition>> picks(core.members.size());
    std::vector<bool> went_live(core.members.size(), false);
    bool stable = false;
    for (std::size_t round = 0; round < kMaxRounds && !stable; ++round) {
      std::map<std::string, MsgSeq> next = guess;
      for (auto j : core.forced) {
        const auto& m = core.members[j];
        NamedSeq in;
        for (const auto& c : m.a.sig.inputs) {
          auto known_it = channel.find(c);
          if (known_it != channel.end()) {
            in.set(c, known_it->second);
          } else {
            auto guess_it = guess.find(c);
            in.set(c, guess_it == guess.end() ? MsgSeq{} : guess_it->second);
          }
        }
        if (!live[j] && in.all_empty()) {
          picks[j].reset();
          went_live[j] = false;
          for (const auto& c : m.a.sig.outputs) next[c] = {};
          continue;
        }
        went_live[j] = !live[j];
        std::optional<Transition> t;
        m.a.transitions(state[j], in, [&](const Transition& tr) {
          t = tr;
          return false;
        });
        if (!t) return;  // no transition under the guess: dead branch
        picks[j] = t;
        for (const auto& c : m.a.sig.outputs) next[c] = t->action.get_or_empty(c);
      }
      stable = (next == guess);
      guess = std::move(next);
    }
    if (!stable) return;  // did not stabilize: dead branch -> Stuck upstream

    for (auto j : core.forced) {
      chosen[j] = picks[j];
      if (went_live[j]) {
        live[j] = true;
        newly_live[j] = true;
      }
      record(core.members[j].a.sig.outputs, picks[j] ? picks[j]->action : NamedSeq());
    }
    run(event_idx + 1);
    for (auto j : core.forced) {
      unrecord(core.members[j].a.sig.outputs);
      chosen[j].reset();
      if (went_live[j]) {
        live[j] = false;
        newly_live[j] = false;
      }
    }
  }

  void finalize() {
    NamedSeq action;
    for (const auto& c : core.sig.inputs) action.set(c, net_input.get_or_empty(c));
    std::vector<std::pair<std::string, Value>> next_live;
    std::size_t live_count = 0;
    for (std::size_t j = 0; j < core.members.size(); ++j) {
      const auto& m = core.members[j];
      if (chosen[j]) {
        // Contract check: the member acted on exactly the inputs we resolved.
        for (const auto& c : m.a.sig.inputs) {
          auto it = channel.find(c);
          const MsgSeq& expect = it == channel.end() ? MsgSeq{} : it->second;
          if (chosen[j]->action.get_or_empty(c) != expect)
            throw Error("member '" + m.id + "' transition disagrees with resolved channel '" + c +
                        "'");
        }
        for (const auto& c : m.a.sig.outputs) action.set(c, chosen[j]->action.get_or_empty(c));
        for (const auto& c : m.a.sig.hidden) action.set(c, chosen[j]->action.get_or_empty(c));
      } else {
        for (const auto& c : m.a.sig.outputs) action.set(c, {});
        for (const auto& c : m.a.sig.hidden) action.set(c, {});
      }
      if (live[j]) {
        ++live_count;
        next_live.emplace_back(m.id, chosen[j] ? chosen[j]->next : state[j]);
      }
    }
    if (live_count > core.max_live)
      throw InfiniteActivity("live member count " + std::to_string(live_count) +
                             " exceeds the configured bound");
    Transition t{std::move(action), fam_state_from(next_live)};
    if (!emit(t)) stop = true;
  }
};

Value initial_fam_state(const FamilyCore& core, const std::vector<std::size_t>& pick) {
  std::vector<std::pair<std::string, Value>> live;
  std::size_t k = 0;
  for (const auto& m : core.members)
    if (m.live0) live.emplace_back(m.id, m.a.initial_states[pick[k++]]);
  return fam_state_from(live);
}

std::vector<Value> product_initials(const FamilyCore& core) {
  std::vector<std::size_t> sizes;
  for (const auto& m : core.members)
    if (m.live0) sizes.push_back(m.a.initial_states.size());
  std::size_t total = 1;
  for (auto s : sizes) {
    total *= s;
    if (total > 4096) throw Error("composed initial-state product exceeds 4096");
  }
  std::vector<Value> out;
  std::vector<std::size_t> idx(sizes.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    out.push_back(initial_fam_state(core, idx));
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (++idx[i] < sizes[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

}  // namespace

PortSignature compose_signatures(const PortSignature& s1, const PortSignature& s2) {
  s1.validate();
  s2.validate();
  for (const auto& c : channels_intersect(s1.outputs, s2.outputs)) throw IncompatibleSignatures(c);
  for (const auto& c : channels_intersect(s1.hidden, s2.all())) throw IncompatibleSignatures(c);
  for (const auto& c : channels_intersect(s2.hidden, s1.all())) throw IncompatibleSignatures(c);
  PortSignature out;
  out.inputs = channels_union(channels_minus(s1.inputs, s2.outputs),
                              channels_minus(s2.inputs, s1.outputs));
  out.outputs = channels_union(s1.outputs, s2.outputs);
  out.hidden = channels_union(s1.hidden, s2.hidden);
  out.validate();
  for (const auto& [c, pool] : s1.alphabet) out.alphabet.emplace(c, pool);
  for (const auto& [c, pool] : s2.alphabet) out.alphabet.emplace(c, pool);
  return out;
}

TickPlan plan_tick(const FamilySpec& f) {
  TickPlan plan;
  build_core(f, &plan);
  return plan;
}

Automaton compose_family(const FamilySpec& f) {
  auto core = build_core(f, nullptr);

  Automaton out;
  out.name = core->name;
  out.sig = core->sig;
  out.initial_states = product_initials(*core);

  // bound hints for network inputs, taken from their consumers.
  for (const auto& m : core->members)
    for (const auto& [c, b] : m.a.bound_hint)
      if (out.sig.inputs.count(c)) {
        auto it = out.bound_hint.find(c);
        out.bound_hint[c] = it == out.bound_hint.end() ? b : std::min(it->second, b);
      }

  out.transitions = [core](const Value& state, const NamedSeq& input, const TransitionSink& sink) {
    Walk walk(*core, state, input);
    walk.mode = Walk::Mode::all;
    walk.ctx.policy = ChoicePolicy::enumerate(SIZE_MAX);
    walk.emit = sink;
    walk.run(0);
  };
  out.select = [core](const Value& state, const NamedSeq& input,
                      const ChoiceCtx& ctx) -> std::optional<Transition> {
    Walk walk(*core, state, input);
    walk.mode = Walk::Mode::policy;
    walk.ctx = ctx;
    walk.ctx.path = ctx.path + "/" + core->name;
    std::optional<Transition> picked;
    walk.emit = [&](const Transition& t) {
      picked = t;
      return false;
    };
    walk.run(0);
    return picked;
  };

  // Full strong pulse-drivenness is preserved by composition: when every
  // member is verified moore on its whole signature, so is the product.
  bool all_full = true;
  for (const auto& m : core->members)
    if (!m.a.has_verified_moore(m.a.sig.inputs, m.a.sig.outputs)) all_full = false;
  if (all_full) out.moore.push_back({out.sig.inputs, out.sig.outputs, true});

  return out;
}

Automaton compose2(const Automaton& a1, const Automaton& a2, bool force) {
  std::string id1 = a1.name.empty() ? "a1" : a1.name;
  std::string id2 = a2.name.empty() ? "a2" : a2.name;
  if (id1 == id2) id2 += "'";
  FamilySpec spec;
  spec.name = "(" + id1 + "." + id2 + ")";
  spec.members.push_back({id1, a1, true});
  spec.members.push_back({id2, a2, true});
  spec.force = force;
  return compose_family(spec);
}

Automaton hide(const Automaton& a, const ChannelSet& p) {
  for (const auto& c : p)
    if (!a.sig.outputs.count(c)) throw NotAnOutput(c);
  Automaton out = a;
  out.sig.outputs = channels_minus(a.sig.outputs, p);
  out.sig.hidden = channels_union(a.sig.hidden, p);
  for (auto& d : out.moore) {
    // A declaration's outputs keep holding after hiding its hidden part.
    d.p = channels_minus(d.p, p);
  }
  return out;
}

}  // namespace tpa
