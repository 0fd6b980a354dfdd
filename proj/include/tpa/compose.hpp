#pragma once

#include "tpa/automaton.hpp"

namespace tpa {

/// One member of a composed network. Members that are not live at the start
/// hold their (unique) initial state and emit nothing until the first tick in
/// which a message is addressed to one of their input channels.
struct FamilyMember {
  std::string id;
  Automaton automaton;
  bool live_at_start = true;
};

struct FamilySpec {
  std::string name;
  std::vector<FamilyMember> members;
  /// Guard against a tick activating an unbounded member set.
  std::size_t max_live = 100000;
  /// Compose despite an unbreakable feedback cycle; the cycle is then solved
  /// per tick by bounded fixed-point iteration and surfaces as Stuck when it
  /// does not stabilize.
  bool force = false;
};

/// The per-tick evaluation order. Every channel consumed in a stage is
/// produced in an earlier stage, is a network input, or is covered by a
/// verified moore declaration of its consumer (a "broken" feedback edge).
struct TickPlan {
  std::vector<std::vector<std::string>> stages;
  struct BrokenEdge {
    std::string from;
    std::string to;
    ChannelSet channels;
  };
  std::vector<BrokenEdge> broken_edges;
  /// Members left in a cycle; nonempty only when composing with force.
  std::vector<std::string> forced;
};

/// Signature composition: I = (I1\O2) u (I2\O1), O = O1 u O2, H = H1 u H2.
/// Throws IncompatibleSignatures (with the witness channel) when the operands
/// share outputs or expose each other's hidden channels.
PortSignature compose_signatures(const PortSignature& s1, const PortSignature& s2);

/// Builds the evaluation order for one tick. Throws PotentialBlocking (listing
/// the cycle) exactly when a dependency cycle has no moore edge to break it
/// and the spec does not force.
TickPlan plan_tick(const FamilySpec& f);

/// Product composition of a finite or lazily-activated member family. Member
/// states materialize on first liveness; the composed transition relation is
/// the indexed product of member transitions, scheduled per plan_tick.
Automaton compose_family(const FamilySpec& f);

/// Binary composition; refused with PotentialBlocking when feedback in both
/// directions exists and neither side carries a verified moore declaration
/// covering it (force converts the refusal into runtime Stuck).
Automaton compose2(const Automaton& a1, const Automaton& a2, bool force = false);

/// Reclassifies output channels in `p` as hidden. States and transitions are
/// untouched; behaviors simply stop mentioning `p`.
Automaton hide(const Automaton& a, const ChannelSet& p);

}  // namespace tpa
