#pragma once

#include <optional>

#include "tpa/blackbox.hpp"
#include "tpa/builtins.hpp"

namespace tpa {

/// A parsed scenario file: instances, wiring, stimuli and run parameters.
/// Grammar (line oriented, UTF-8, '#' comments):
///   network <name>
///   use <kind> as <id> [param=value ...]
///   wire <port> -> <port>[,<port>...]
///   route <pattern> -> <dest>[,<dest>...]
///   medium cma|cmas [window=W] [batch=B]
///   input <channel> @<tick> : <m1> <m2> ...
///   input <channel> @<from>..<to> : <m1> <m2> ...
///   horizon <T>
///   seed <S>
///   policy first|random|all<=k
struct Scenario {
  std::string network_name;

  struct Instance {
    std::string kind;
    std::string id;
    std::map<std::string, std::string> params;
  };
  std::vector<Instance> instances;

  std::vector<std::pair<std::string, std::vector<std::string>>> wires;
  std::vector<std::string> route_lines;

  struct MediumDirective {
    MediumSpec::Delay delay = MediumSpec::Delay::cmas;
    std::size_t window = 0;
    std::size_t batch = 1;
  };
  std::optional<MediumDirective> medium;

  struct Stimulus {
    std::string channel;
    std::size_t from = 1;
    std::size_t to = 1;
    MsgSeq msgs;
  };
  std::vector<Stimulus> stimuli;

  std::size_t horizon = 10;
  std::uint64_t seed = 0;
  ChoicePolicy policy;
};

Scenario parse_scenario(const std::string& text);

/// The executable form of a scenario: the assembled network plus its input.
struct BuiltNetwork {
  Automaton automaton;
  TimedTrace input;
  std::optional<MediumSpec> medium_spec;  // when the network routes through one
};

BuiltNetwork build_network(const Scenario& s);

/// Assembles, executes, and returns the external behavior trace.
TimedTrace run_scenario(const Scenario& s);

struct CheckOutcome {
  bool pass = false;
  std::string report;
};

/// Properties: reactivity | weak-pulse | strong-pulse | medium-laws |
/// stability(k). `samples` feeds the pulse checks, `budget` the reactivity
/// probes and membership searches.
CheckOutcome check_scenario(const Scenario& s, const std::string& property, std::size_t samples,
                            std::size_t budget);

std::vector<std::string> builtin_kinds();

}  // namespace tpa
