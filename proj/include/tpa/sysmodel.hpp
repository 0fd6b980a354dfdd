#pragma once

#include "tpa/compose.hpp"

namespace tpa {

/// Component hierarchy: a tree of component ids rooted at `root()`, with
/// exclusive port ownership (every port belongs to exactly one component and
/// is either input or output, never both).
class Hierarchy {
 public:
  explicit Hierarchy(std::string root = "RootSystem");

  /// Adds a component under `parent`; its ports must be globally unused.
  void add(const std::string& id, const std::string& parent, ChannelSet in_ports,
           ChannelSet out_ports);

  /// Assigns ports to an existing component (typically the root).
  void set_ports(const std::string& id, ChannelSet in_ports, ChannelSet out_ports);

  const std::string& root() const { return root_; }
  bool contains(const std::string& id) const { return nodes_.count(id) != 0; }
  const std::set<std::string>& parts(const std::string& id) const;
  const ChannelSet& in_ports(const std::string& id) const;
  const ChannelSet& out_ports(const std::string& id) const;
  bool is_basic(const std::string& id) const { return parts(id).empty(); }
  std::vector<std::string> ids() const;

  /// Medium signature pieces: origins = In_c + the parts' outputs,
  /// destinations = Out_c + the parts' inputs.
  ChannelSet origins_of(const std::string& id) const;
  ChannelSet destinations_of(const std::string& id) const;

  /// Re-asserts treeness and port exclusivity (construction maintains both).
  void validate() const;

 private:
  struct Node {
    std::string parent;
    std::set<std::string> parts;
    ChannelSet in;
    ChannelSet out;
  };
  const Node& node(const std::string& id) const;
  void claim_ports(const std::string& id, const ChannelSet& in, const ChannelSet& out);

  std::string root_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, std::string> port_owner_;
};

/// Routing and delivery discipline of one communication medium.
struct MediumSpec {
  enum class Delay {
    cma,         // may deliver in the arrival tick; fairness-slot driven
    cmas,        // stores first, delivers from the previous state: >= 1 tick
    passthrough  // stateless full drain every tick (zero delay)
  };

  std::string component;
  ChannelSet origins;
  ChannelSet destinations;

  /// Channel the message must have arrived on; when it returns a value that
  /// differs from the arrival channel, distribute reports OriginMismatch.
  /// Required (total) by check_medium_laws.
  std::function<std::optional<std::string>(const Message&)> origin;

  /// Destination channels of a message; must not depend on medium state. The
  /// arrival channel is passed for wire-style routing of meta-less messages.
  std::function<std::vector<std::string>(const Message&, const std::string&)> destination;

  Delay delay = Delay::cmas;
  /// Messages emitted per fairness slot; 0 drains the whole buffer.
  std::size_t batch = 1;
  /// Fairness window W; 0 means the default 4 * |destinations|.
  std::size_t window = 0;
  /// Idle slots appended to each fairness cycle.
  std::size_t nil_slots = 0;
  /// Reject messages whose destination set is empty.
  bool no_loss = true;
  /// Whether the routing may send an environment message straight back to the
  /// environment; when false and all parts are moore, the assembled component
  /// is strongly pulse-driven.
  bool env_to_env = true;

  std::size_t fairness_window() const { return window ? window : 4 * destinations.size(); }
  /// One fairness cycle: destinations in lexicographic order plus idle slots.
  std::vector<std::string> fairness_cycle() const;
};

/// Routes one tick of arrivals into per-destination sequences, duplicating
/// broadcasts. Origins are processed in lexicographic channel order, messages
/// within one origin in arrival order.
NamedSeq distribute(const MediumSpec& spec, const NamedSeq& theta);

/// The medium as a timed port automaton over (origins -> destinations).
/// cmas carries a verified full moore declaration; cma and passthrough are
/// weakly pulse-driven.
Automaton medium_automaton(const MediumSpec& spec);

/// True when (action, next) is a transition the cma relation admits from
/// (state, input); used to probe that the cmas relation is contained in it.
bool cma_admits(const MediumSpec& spec, const Value& state, const NamedSeq& input,
                const NamedSeq& action_out, const Value& next);

struct LawResult {
  std::string law;
  bool ok = true;
  std::string witness;
};

struct MediumLawReport {
  bool ok = true;
  std::vector<LawResult> laws;
  std::string first_violation() const;
};

/// Runs the medium on `workload` (padded by one fairness window of silence)
/// and audits: per-(origin,destination) order, no generation, no
/// modification, exactly-once by horizon + W, state-independent routing, and
/// delivery within the window. Requires a total spec.origin.
MediumLawReport check_medium_laws(const MediumSpec& spec, const TimedTrace& workload);

// ---------------------------------------------------------------------------
// Routing tables
// ---------------------------------------------------------------------------

/// Text form, one rule per line, first match wins:
///   route <sort|*>[@<sender|*>-><receiver|*>] -> <dest>[,<dest>...]
///   route * -> drop|error
/// The catch-all is mandatory. `drop` discards, `error` raises LostMessage.
struct RoutingTable {
  struct Rule {
    std::string sort;  // "*" matches any
    bool match_meta = false;
    std::string sender;    // "*" matches any
    std::string receiver;  // "*" matches any
    std::vector<std::string> dests;
    bool error_on_match = false;
  };
  std::vector<Rule> rules;

  static RoutingTable parse(const std::string& text);
  std::vector<std::string> route(const Message& m) const;
};

// ---------------------------------------------------------------------------
// Assembly of distributed components
// ---------------------------------------------------------------------------

struct AssembleOptions {
  /// Parts live at tick 0; empty means all parts.
  std::set<std::string> initially_live;
  std::size_t max_live = 100000;
};

struct Assembly {
  Automaton automaton;  // part ports hidden; external signature (In_c, Out_c)
  Automaton composite;  // the same composition before hiding
  Automaton medium;
  std::vector<std::string> part_ids;
};

/// Composes the parts of distributed component `c` with its communication
/// medium and hides the internal part ports. Refused with PotentialBlocking
/// unless the medium is cmas or every part carries a verified full moore
/// declaration. The result carries a full moore declaration when the medium
/// is cmas, or when all parts are moore and no environment message is routed
/// back to the environment.
Assembly assemble(const Hierarchy& h, const std::string& c,
                  const std::map<std::string, Automaton>& parts, const MediumSpec& spec,
                  const AssembleOptions& options = {});

}  // namespace tpa
