#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tpa/message.hpp"
#include "tpa/rng.hpp"
#include "tpa/streams.hpp"

namespace tpa {

ChannelSet channels_union(const ChannelSet& a, const ChannelSet& b);
ChannelSet channels_intersect(const ChannelSet& a, const ChannelSet& b);
ChannelSet channels_minus(const ChannelSet& a, const ChannelSet& b);
bool channels_subset(const ChannelSet& a, const ChannelSet& b);

/// Disjoint input/output/hidden channel sets. `alphabet` optionally constrains
/// (per channel) the messages used by exhaustive and sampled checks.
struct PortSignature {
  ChannelSet inputs;
  ChannelSet outputs;
  ChannelSet hidden;
  std::map<std::string, MsgSeq> alphabet;

  ChannelSet all() const;
  ChannelSet external() const;

  /// Throws IncompatibleSignatures when the three sets are not pairwise disjoint.
  void validate() const;
};

/// Declares that the outputs on `p` during a tick do not depend on that tick's
/// input on `g`. The composition scheduler only trusts declarations whose
/// `verified` flag is set (structurally, by construction, or via verify_moore).
struct MooreDecl {
  ChannelSet g;
  ChannelSet p;
  bool verified = false;
};

struct Transition {
  NamedSeq action;  // domain = all()
  Value next;
};

/// Enumeration callback; return false to stop early.
using TransitionSink = std::function<bool(const Transition&)>;

/// The transition relation as a generator: given (state, input over I) it
/// enumerates (action over C, next state) pairs whose input projection equals
/// the supplied input. Must be pure and enumerate deterministically.
using TransitionGen = std::function<void(const Value&, const NamedSeq&, const TransitionSink&)>;

/// Resolves the nondeterminism of the transition relation, reproducibly.
struct ChoicePolicy {
  enum class Strategy { first, uniform_random, enumerate_all };
  Strategy strategy = Strategy::first;
  std::uint64_t seed = 0;
  std::size_t branch_limit = 16;   // alternatives kept per node in set explorations
  std::size_t enum_cap = 4096;     // alternatives visited per choice point
  std::size_t frontier_cap = 512;  // prefixes tracked per tick in set explorations

  static ChoicePolicy first_choice(std::uint64_t seed = 0);
  static ChoicePolicy random_choice(std::uint64_t seed);
  static ChoicePolicy enumerate(std::size_t branch_limit, std::uint64_t seed = 0);
};

/// Identifies one choice point: policy plus the tick and a hierarchical label,
/// so nested components draw from independent, stateless sub-streams.
struct ChoiceCtx {
  ChoicePolicy policy;
  std::size_t tick = 1;
  std::string path;
};

using SelectFn =
    std::function<std::optional<Transition>(const Value&, const NamedSeq&, const ChoiceCtx&)>;

struct Automaton {
  std::string name;
  PortSignature sig;
  std::vector<Value> initial_states;
  TransitionGen transitions;
  std::vector<MooreDecl> moore;

  /// Per-input-channel cap on messages per tick, for exhaustive checking.
  std::map<std::string, std::size_t> bound_hint;
  /// The full state set, when finite and known.
  std::optional<std::vector<Value>> state_hint;
  /// Policy-directed chooser; set by composition so member choices stay
  /// independent. When absent, the generic chooser over `transitions` is used.
  SelectFn select;

  /// True when some verified declaration covers (g, p): a declaration with a
  /// larger g and larger p implies any smaller one.
  bool has_verified_moore(const ChannelSet& g, const ChannelSet& p) const;

  /// A verified declaration whose p covers `needed_outputs`, preferring the
  /// one deferring the most inputs. Null when none qualifies.
  const MooreDecl* usable_moore(const ChannelSet& needed_outputs) const;
};

/// A finite run: states s0..sT plus the action trace over all channels.
struct Execution {
  std::vector<Value> states;
  TimedTrace actions;
};

/// External-action projection of an execution.
TimedTrace behavior_of(const Automaton& a, const Execution& e);

/// Runs `a` for the input's horizon. Throws Stuck when the generator offers no
/// transition, and Error when a transition violates the generator contract.
Execution execute(const Automaton& a, const TimedTrace& input, const ChoicePolicy& policy);

/// Bounded deterministic exploration of the behavior prefixes for `input`:
/// at most policy.branch_limit alternatives per node per tick and
/// policy.frontier_cap tracked prefixes. Returns external traces, deduplicated.
std::set<TimedTrace> behaviors(const Automaton& a, const TimedTrace& input,
                               const ChoicePolicy& policy);

/// One policy-resolved transition, or nullopt when the state is stuck.
std::optional<Transition> select_transition(const Automaton& a, const Value& state,
                                            const NamedSeq& input, const ChoiceCtx& ctx);

/// Incremental executor around execute()'s per-tick logic; used by drivers
/// that must react to outputs before producing the next input.
class Stepper {
 public:
  Stepper(Automaton a, ChoicePolicy policy, std::string path = "");

  const Automaton& automaton() const { return a_; }
  const Value& state() const { return state_; }
  std::size_t next_tick() const { return tick_; }

  /// Feeds one tick of input, returns the chosen transition's action.
  NamedSeq step(const NamedSeq& input);

 private:
  Automaton a_;
  ChoicePolicy policy_;
  std::string path_;
  Value state_;
  std::size_t tick_ = 1;
};

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

enum class ReactivityMode { exhaustive, sampled };

struct ReactivityReport {
  enum class Status { pass, not_reactive, budget_insufficient };
  Status status = Status::pass;
  bool exhaustive = false;
  std::size_t probes = 0;
  std::optional<std::pair<Value, NamedSeq>> witness;
  std::string detail;
  bool ok() const { return status == Status::pass; }
};

/// Exhaustive mode proves every (state, bounded input) has a transition; it
/// requires state_hint, bound_hint and alphabets on all inputs, and reports
/// budget_insufficient when the combination count exceeds `budget`. Sampled
/// mode probes `budget` random (reachable state, input) pairs.
ReactivityReport check_reactivity(const Automaton& a, ReactivityMode mode, std::size_t budget,
                                  std::uint64_t seed = 0);

struct PulseReport {
  bool ok = true;
  std::size_t samples = 0;
  std::string witness;
};

/// Samples input pairs agreeing up to a random tick n and compares the
/// behavior-prefix sets at n. Every reactive automaton passes.
PulseReport check_weak_pulse(const Automaton& a, std::size_t horizon, std::size_t samples,
                             const ChoicePolicy& policy);

/// Samples input pairs agreeing on g up to n and everywhere else up to n+1,
/// and compares the p-projected behavior sets at n+1.
PulseReport check_strong_pulse(const Automaton& a, const ChannelSet& g, const ChannelSet& p,
                               std::size_t horizon, std::size_t samples,
                               const ChoicePolicy& policy);

enum class Membership { accepted, rejected, inconclusive };

/// Bounded depth-first search for an execution whose external projection
/// equals `trace` (hidden channels and branch choices are free). `budget`
/// caps the number of transitions enumerated.
Membership check_trace_membership(const Automaton& a, const TimedTrace& trace, std::size_t budget);

struct MooreProbeReport {
  bool ok = true;
  std::size_t probes = 0;
  std::string witness;
};

/// Randomized soundness probe for moore declaration `decl_index`: at sampled
/// reachable states, inputs differing only on g must yield identical
/// p-projection sets. Marks the declaration verified on success.
MooreProbeReport verify_moore(Automaton& a, std::size_t decl_index, std::size_t probes,
                              std::uint64_t seed, std::size_t walk_horizon = 6);

// ---------------------------------------------------------------------------
// Random inputs for sampled checks
// ---------------------------------------------------------------------------

/// Sequence lengths are geometric (p = 0.5, capped); message contents come
/// from the channel's alphabet when declared, else from a small integer pool.
NamedSeq random_input(const PortSignature& sig, Rng& rng, std::size_t len_cap = 8);
TimedTrace random_input_trace(const PortSignature& sig, std::size_t horizon, Rng& rng,
                              std::size_t len_cap = 8);

}  // namespace tpa
