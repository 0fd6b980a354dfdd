#include "tpa/blackbox.hpp"

#include <algorithm>

#include "tpa/errors.hpp"

namespace tpa {

NamedSeq StreamFnInstance::pre_output() {
  throw Error("pre_output on a weak stream function");
}

Component component_of(StreamFn f) {
  Component c;
  c.inputs = f.inputs;
  c.outputs = f.outputs;
  c.members.push_back(std::move(f));
  return c;
}

TimedTrace eval(const StreamFn& f, const TimedTrace& input) {
  if (input.channels() != f.inputs)
    throw ChannelMismatch("eval: input channels do not match function '" + f.name + "'");
  auto inst = f.make();
  TimedTrace out(f.outputs, 0);
  for (std::size_t n = 1; n <= input.horizon(); ++n) {
    NamedSeq o = inst->step(input.tick(n));
    if (o.domain() != f.outputs)
      throw ChannelMismatch("eval: function '" + f.name + "' produced a bad output domain");
    out.push_tick(std::move(o));
  }
  return out;
}

PulseReport check_fn_pulse(const StreamFn& f, Strength strength, std::size_t horizon,
                           std::size_t samples, std::uint64_t seed) {
  PulseReport r;
  PortSignature sig;
  sig.inputs = f.inputs;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, "fnpulse#" + std::to_string(s)));
    std::size_t n = horizon == 0 ? 0 : rng.below(horizon);
    TimedTrace iota = random_input_trace(sig, n + 1, rng);
    TimedTrace kappa = iota;
    kappa.set_tick(n + 1, random_input(sig, rng));
    std::size_t cut = strength == Strength::weak ? n : n + 1;
    TimedTrace lhs = prefix(eval(f, iota), cut);
    TimedTrace rhs = prefix(eval(f, kappa), cut);
    ++r.samples;
    if (lhs != rhs) {
      r.ok = false;
      r.witness = "outputs diverge within the first " + std::to_string(cut) +
                  " tick(s) for inputs agreeing through tick " + std::to_string(n) + ":\n" +
                  format_trace(iota) + "vs\n" + format_trace(kappa);
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

namespace {

struct FnPlan {
  ChannelSet inputs;                 // composed I
  ChannelSet outputs;                // composed O
  std::vector<std::size_t> strong;   // publish first, resolve last
  std::vector<std::size_t> ordered;  // weak members in dependency order
};

FnPlan plan_functions(const std::vector<const StreamFn*>& fns) {
  FnPlan plan;
  ChannelSet all_in, all_out;
  for (const auto* f : fns) {
    for (const auto& c : channels_intersect(f->inputs, f->outputs)) throw ChannelClash(c);
    for (const auto& c : f->outputs) {
      if (all_out.count(c)) throw ChannelClash(c);
      all_out.insert(c);
    }
    all_in = channels_union(all_in, f->inputs);
  }
  plan.inputs = channels_minus(all_in, all_out);
  plan.outputs = all_out;

  std::map<std::string, std::size_t> producer;
  for (std::size_t j = 0; j < fns.size(); ++j)
    for (const auto& c : fns[j]->outputs) producer[c] = j;

  std::vector<std::size_t> weak;
  std::vector<bool> is_strong(fns.size(), false);
  for (std::size_t j = 0; j < fns.size(); ++j) {
    if (fns[j]->strength == Strength::strong) {
      is_strong[j] = true;
      plan.strong.push_back(j);
    } else {
      weak.push_back(j);
    }
  }

  // Dependency order among the weak members; strong outputs are available up
  // front, so only weak-to-weak edges constrain.
  std::map<std::size_t, std::set<std::size_t>> succ;
  std::map<std::size_t, std::size_t> indeg;
  for (auto j : weak) indeg[j] = 0;
  for (auto j : weak)
    for (const auto& c : fns[j]->inputs) {
      auto it = producer.find(c);
      if (it == producer.end() || is_strong[it->second] || it->second == j) continue;
      if (succ[it->second].insert(j).second) ++indeg[j];
    }
  std::vector<std::size_t> ready;
  for (auto j : weak)
    if (indeg[j] == 0) ready.push_back(j);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end());
    std::size_t j = ready.front();
    ready.erase(ready.begin());
    plan.ordered.push_back(j);
    for (auto k : succ[j])
      if (--indeg[k] == 0) ready.push_back(k);
  }
  if (plan.ordered.size() != weak.size()) {
    std::string cycle;
    for (auto j : weak)
      if (std::find(plan.ordered.begin(), plan.ordered.end(), j) == plan.ordered.end())
        cycle += (cycle.empty() ? "" : ", ") + fns[j]->name;
    throw PotentialBlocking("mutually dependent weak functions: " + cycle);
  }
  return plan;
}

class ComposedFnInstance : public StreamFnInstance {
 public:
  ComposedFnInstance(std::vector<StreamFn> fns, FnPlan plan)
      : fns_(std::move(fns)), plan_(std::move(plan)) {
    for (const auto& f : fns_) insts_.push_back(f.make());
  }

  NamedSeq pre_output() override {
    NamedSeq out;
    for (auto j : plan_.strong) {
      NamedSeq o = insts_[j]->pre_output();
      for (const auto& c : fns_[j].outputs) out.set(c, o.get_or_empty(c));
    }
    if (out.domain() != plan_.outputs) throw Error("pre_output on a partially weak composition");
    return out;
  }

  NamedSeq step(const NamedSeq& input) override {
    std::map<std::string, MsgSeq> channel;
    for (const auto& [c, s] : input.entries()) channel[c] = s;

    auto assemble = [&](const StreamFn& f) {
      NamedSeq in;
      for (const auto& c : f.inputs) {
        auto it = channel.find(c);
        if (it == channel.end()) throw Error("unresolved channel '" + c + "' in composition");
        in.set(c, it->second);
      }
      return in;
    };

    for (auto j : plan_.strong) {
      NamedSeq o = insts_[j]->pre_output();
      for (const auto& c : fns_[j].outputs) channel[c] = o.get_or_empty(c);
    }
    for (auto j : plan_.ordered) {
      NamedSeq o = insts_[j]->step(assemble(fns_[j]));
      for (const auto& c : fns_[j].outputs) channel[c] = o.get_or_empty(c);
    }
    for (auto j : plan_.strong) {
      NamedSeq o = insts_[j]->step(assemble(fns_[j]));
      for (const auto& c : fns_[j].outputs)
        if (o.get_or_empty(c) != channel[c])
          throw Error("function '" + fns_[j].name + "' declared strong but its step output " +
                      "differs from its pre-tick output");
    }

    NamedSeq out;
    for (const auto& c : plan_.outputs) out.set(c, channel.at(c));
    return out;
  }

 private:
  std::vector<StreamFn> fns_;
  FnPlan plan_;
  std::vector<std::unique_ptr<StreamFnInstance>> insts_;
};

StreamFn compose_selection(const std::vector<const StreamFn*>& sel) {
  FnPlan plan = plan_functions(sel);
  StreamFn out;
  for (std::size_t i = 0; i < sel.size(); ++i) out.name += (i ? "." : "") + sel[i]->name;
  out.inputs = plan.inputs;
  out.outputs = plan.outputs;
  out.strength = plan.ordered.empty() && !plan.strong.empty() ? Strength::strong : Strength::weak;
  std::vector<StreamFn> fns;
  for (const auto* f : sel) fns.push_back(*f);
  out.make = [fns, plan]() { return std::make_unique<ComposedFnInstance>(fns, plan); };
  return out;
}

Component compose_components(const std::vector<Component>& parts) {
  if (parts.empty()) throw Error("compose_family_fn: empty family");
  for (const auto& p : parts)
    if (p.members.empty()) throw Error("component with no members");

  // Every selection of one member per component; the plan is re-derived per
  // selection since strengths may differ across members.
  std::size_t total = 1;
  for (const auto& p : parts) {
    total *= p.members.size();
    if (total > 256) throw Error("composed member family exceeds 256 functions");
  }

  Component out;
  std::vector<std::size_t> idx(parts.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::vector<const StreamFn*> sel;
    for (std::size_t i = 0; i < parts.size(); ++i) sel.push_back(&parts[i].members[idx[i]]);
    StreamFn composed = compose_selection(sel);
    if (n == 0) {
      out.inputs = composed.inputs;
      out.outputs = composed.outputs;
    }
    out.members.push_back(std::move(composed));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (++idx[i] < parts[i].members.size()) break;
      idx[i] = 0;
    }
  }
  return out;
}

}  // namespace

Component compose2_fn(const Component& f1, const Component& f2) {
  return compose_components({f1, f2});
}

Component compose_family_fn(const std::vector<Component>& members) {
  return compose_components(members);
}

Component hide_fn(const Component& f, const ChannelSet& p) {
  for (const auto& c : p)
    if (!f.outputs.count(c)) throw NotAnOutput(c);
  ChannelSet keep = channels_minus(f.outputs, p);

  class Hidden : public StreamFnInstance {
   public:
    Hidden(std::unique_ptr<StreamFnInstance> inner, ChannelSet keep)
        : inner_(std::move(inner)), keep_(std::move(keep)) {}
    NamedSeq pre_output() override { return project(inner_->pre_output(), keep_); }
    NamedSeq step(const NamedSeq& input) override { return project(inner_->step(input), keep_); }

   private:
    std::unique_ptr<StreamFnInstance> inner_;
    ChannelSet keep_;
  };

  Component out;
  out.inputs = f.inputs;
  out.outputs = keep;
  for (const auto& m : f.members) {
    StreamFn h = m;
    h.outputs = keep;
    auto make_inner = m.make;
    h.make = [make_inner, keep]() { return std::make_unique<Hidden>(make_inner(), keep); };
    out.members.push_back(std::move(h));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extraction from automata
// ---------------------------------------------------------------------------

namespace {

class AutomatonFnInstance : public StreamFnInstance {
 public:
  AutomatonFnInstance(Automaton a, ChoicePolicy policy, bool strong)
      : a_(std::move(a)), policy_(policy), strong_(strong) {
    path_ = a_.name + "#fn";
    ChoiceCtx ctx{policy_, 0, path_};
    if (a_.initial_states.empty()) throw Error("automaton has no initial state");
    if (policy_.strategy == ChoicePolicy::Strategy::uniform_random) {
      Rng rng(derive_seed(policy_.seed, path_ + "#init"));
      state_ = a_.initial_states[rng.below(a_.initial_states.size())];
    } else {
      state_ = a_.initial_states.front();
    }
  }

  NamedSeq pre_output() override {
    if (!strong_) return StreamFnInstance::pre_output();
    if (!published_) {
      // Output is state-determined; probe with an empty placeholder input.
      NamedSeq placeholder = NamedSeq::empty_on(a_.sig.inputs);
      auto t = pick(placeholder, nullptr);
      if (!t) throw Stuck(state_.to_string(), placeholder.to_string(), tick_);
      published_ = project(t->action, a_.sig.outputs);
    }
    return *published_;
  }

  NamedSeq step(const NamedSeq& input) override {
    std::optional<Transition> t;
    if (strong_) {
      NamedSeq expect = pre_output();
      t = pick(input, &expect);
    } else {
      t = select_transition(a_, state_, input, ChoiceCtx{policy_, tick_, path_});
    }
    if (!t) throw Stuck(state_.to_string(), input.to_string(), tick_);
    NamedSeq out = project(t->action, a_.sig.outputs);
    state_ = t->next;
    published_.reset();
    ++tick_;
    return out;
  }

 private:
  std::optional<Transition> pick(const NamedSeq& input, const NamedSeq* output_filter) {
    std::vector<Transition> alts;
    a_.transitions(state_, input, [&](const Transition& t) {
      if (!output_filter || project(t.action, a_.sig.outputs) == *output_filter)
        alts.push_back(t);
      if (policy_.strategy != ChoicePolicy::Strategy::uniform_random && !alts.empty()) return false;
      return alts.size() < policy_.enum_cap;
    });
    if (alts.empty()) return std::nullopt;
    std::size_t i = 0;
    if (policy_.strategy == ChoicePolicy::Strategy::uniform_random && alts.size() > 1) {
      Rng rng(derive_seed(policy_.seed, path_ + "#step", tick_));
      i = rng.below(alts.size());
    }
    return alts[i];
  }

  Automaton a_;
  ChoicePolicy policy_;
  bool strong_;
  std::string path_;
  Value state_;
  std::size_t tick_ = 1;
  std::optional<NamedSeq> published_;
};

}  // namespace

Component functions_of(const Automaton& a, const std::vector<ChoicePolicy>& policies) {
  if (policies.empty()) throw Error("functions_of: at least one policy required");
  bool strong = a.has_verified_moore(a.sig.inputs, a.sig.outputs);
  Component out;
  out.inputs = a.sig.inputs;
  out.outputs = a.sig.outputs;
  std::size_t k = 0;
  for (const auto& p : policies) {
    StreamFn f;
    f.name = a.name + "#" + std::to_string(k++);
    f.inputs = a.sig.inputs;
    f.outputs = a.sig.outputs;
    f.strength = strong ? Strength::strong : Strength::weak;
    Automaton copy = a;
    f.make = [copy, p, strong]() { return std::make_unique<AutomatonFnInstance>(copy, p, strong); };
    out.members.push_back(std::move(f));
  }
  return out;
}

bool closure_probe(const Component& f, std::size_t horizon, std::size_t samples,
                   std::uint64_t seed) {
  if (f.members.empty()) return false;
  PortSignature sig;
  sig.inputs = f.inputs;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, "closure#" + std::to_string(s)));
    TimedTrace iota = random_input_trace(sig, horizon, rng);
    // A function stitched from the family by input: for this input it plays
    // member h; pointwise membership demands some member matching it here.
    std::size_t h = rng.below(f.members.size());
    TimedTrace stitched = eval(f.members[h], iota);
    bool matched = false;
    for (const auto& m : f.members)
      if (eval(m, iota) == stitched) {
        matched = true;
        break;
      }
    if (!matched) return false;
  }
  return true;
}

}  // namespace tpa
