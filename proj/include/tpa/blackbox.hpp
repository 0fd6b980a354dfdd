#pragma once

#include <memory>

#include "tpa/automaton.hpp"

namespace tpa {

enum class Strength { weak, strong };

/// Stateful tick-by-tick evaluator behind a stream function. Instances are
/// single-consumer; a fresh instance restarts the function from scratch.
class StreamFnInstance {
 public:
  virtual ~StreamFnInstance() = default;

  /// Strong functions only: the current tick's output, derived from state
  /// alone, available before the tick's input. Must be idempotent until the
  /// next step() and must equal what step() returns.
  virtual NamedSeq pre_output();

  /// Consumes one tick of input and returns that tick's output.
  virtual NamedSeq step(const NamedSeq& input) = 0;
};

/// An executable pulse-driven stream function: a constructor for independent
/// evaluator instances plus its channel signature and declared strength.
struct StreamFn {
  std::string name;
  ChannelSet inputs;
  ChannelSet outputs;
  Strength strength = Strength::weak;
  std::function<std::unique_ptr<StreamFnInstance>()> make;
};

/// A component in the history-based view: a nonempty finite family of stream
/// functions sharing one signature.
struct Component {
  ChannelSet inputs;
  ChannelSet outputs;
  std::vector<StreamFn> members;
};

Component component_of(StreamFn f);

/// Applies `f` tick by tick; the output trace has the input's horizon.
TimedTrace eval(const StreamFn& f, const TimedTrace& input);

/// Sampled prefix check of the declared strength: inputs agreeing through a
/// random tick n must give outputs agreeing through n (weak) or n+1 (strong).
PulseReport check_fn_pulse(const StreamFn& f, Strength strength, std::size_t horizon,
                           std::size_t samples, std::uint64_t seed = 0);

/// Binary composition: member family is every pair, each evaluated per tick
/// with the strong side first. Feedback in both directions with no strong
/// side is refused with PotentialBlocking.
Component compose2_fn(const Component& f1, const Component& f2);

/// Indexed composition generalizing compose2_fn: strong members publish their
/// tick output first, the rest evaluate in dependency order.
Component compose_family_fn(const std::vector<Component>& members);

/// Members post-composed with projection onto the surviving outputs.
Component hide_fn(const Component& f, const ChannelSet& p);

/// One stream function per policy: the policy-resolved deterministic
/// unrolling of the automaton. Strong when the automaton carries a verified
/// full moore declaration.
Component functions_of(const Automaton& a, const std::vector<ChoicePolicy>& policies);

/// Pointwise membership probe for the closure condition: a function stitched
/// together from the members tick-block by tick-block must agree with some
/// member on each sampled input. True by construction for the stitched
/// function; the full closure condition quantifies over all pulse-driven
/// functions and admits no finite test.
bool closure_probe(const Component& f, std::size_t horizon, std::size_t samples,
                   std::uint64_t seed = 0);

}  // namespace tpa
