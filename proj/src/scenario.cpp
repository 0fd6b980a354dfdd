#include "tpa/scenario.hpp"

#include <algorithm>
#include <sstream>

#include "tpa/errors.hpp"

namespace tpa {

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string token;
  while (std::getline(in, token, ',')) {
    auto b = token.find_first_not_of(" \t");
    auto e = token.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(token.substr(b, e - b + 1));
  }
  return out;
}

std::size_t parse_count(const std::string& s, std::size_t line, const std::string& what) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ParseError(line, "bad " + what + " '" + s + "'");
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_network = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;

    if (kw == "network") {
      if (!(ls >> s.network_name)) throw ParseError(lineno, "network needs a name");
      saw_network = true;
    } else if (kw == "use") {
      Scenario::Instance inst;
      std::string as;
      if (!(ls >> inst.kind >> as >> inst.id) || as != "as")
        throw ParseError(lineno, "expected 'use <kind> as <id>'");
      auto kinds = builtin_kinds();
      if (std::find(kinds.begin(), kinds.end(), inst.kind) == kinds.end())
        throw ParseError(lineno, "unknown kind '" + inst.kind + "'");
      std::string param;
      while (ls >> param) {
        auto eq = param.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "parameters look like key=value");
        inst.params[param.substr(0, eq)] = param.substr(eq + 1);
      }
      s.instances.push_back(std::move(inst));
    } else if (kw == "wire") {
      std::string from, arrow, rest;
      if (!(ls >> from >> arrow) || arrow != "->")
        throw ParseError(lineno, "expected 'wire <port> -> <port>[,...]'");
      std::getline(ls, rest);
      auto dests = split_commas(rest);
      if (dests.empty()) throw ParseError(lineno, "wire needs at least one target");
      s.wires.emplace_back(from, dests);
    } else if (kw == "route") {
      std::string rest;
      std::getline(ls, rest);
      s.route_lines.push_back("route" + rest);
    } else if (kw == "medium") {
      Scenario::MediumDirective m;
      std::string kind;
      if (!(ls >> kind)) throw ParseError(lineno, "medium needs cma or cmas");
      if (kind == "cma") {
        m.delay = MediumSpec::Delay::cma;
      } else if (kind == "cmas") {
        m.delay = MediumSpec::Delay::cmas;
      } else {
        throw ParseError(lineno, "medium kind must be cma or cmas");
      }
      std::string param;
      while (ls >> param) {
        auto eq = param.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "parameters look like key=value");
        std::string key = param.substr(0, eq);
        std::size_t v = parse_count(param.substr(eq + 1), lineno, "medium parameter");
        if (key == "window") {
          m.window = v;
        } else if (key == "batch") {
          m.batch = v;
        } else {
          throw ParseError(lineno, "unknown medium parameter '" + key + "'");
        }
      }
      s.medium = m;
    } else if (kw == "input") {
      Scenario::Stimulus st;
      std::string at, colon;
      if (!(ls >> st.channel >> at >> colon) || colon != ":" || at.empty() || at[0] != '@')
        throw ParseError(lineno, "expected 'input <channel> @<tick> : <messages>'");
      std::string range = at.substr(1);
      auto dots = range.find("..");
      if (dots == std::string::npos) {
        st.from = st.to = parse_count(range, lineno, "tick");
      } else {
        st.from = parse_count(range.substr(0, dots), lineno, "tick");
        st.to = parse_count(range.substr(dots + 2), lineno, "tick");
      }
      if (st.from == 0 || st.to < st.from) throw ParseError(lineno, "bad tick range");
      std::string token;
      while (ls >> token) {
        try {
          st.msgs.push_back(Message::parse(token));
        } catch (const Error& e) {
          throw ParseError(lineno, e.what());
        }
      }
      s.stimuli.push_back(std::move(st));
    } else if (kw == "horizon") {
      std::string v;
      if (!(ls >> v)) throw ParseError(lineno, "horizon needs a count");
      s.horizon = parse_count(v, lineno, "horizon");
      if (s.horizon < 1) throw ParseError(lineno, "horizon must be >= 1");
    } else if (kw == "seed") {
      std::string v;
      if (!(ls >> v)) throw ParseError(lineno, "seed needs a number");
      s.seed = parse_count(v, lineno, "seed");
    } else if (kw == "policy") {
      std::string v;
      if (!(ls >> v)) throw ParseError(lineno, "policy needs a strategy");
      if (v == "first") {
        s.policy.strategy = ChoicePolicy::Strategy::first;
      } else if (v == "random") {
        s.policy.strategy = ChoicePolicy::Strategy::uniform_random;
      } else if (v.rfind("all<=", 0) == 0) {
        s.policy.strategy = ChoicePolicy::Strategy::enumerate_all;
        s.policy.branch_limit = parse_count(v.substr(5), lineno, "branch limit");
      } else {
        throw ParseError(lineno, "policy must be first, random or all<=k");
      }
    } else {
      throw ParseError(lineno, "unknown directive '" + kw + "'");
    }
  }
  if (!saw_network) throw ParseError(lineno, "missing 'network' line");
  if (s.instances.empty()) throw ParseError(lineno, "no 'use' lines");
  s.policy.seed = s.seed;
  return s;
}

// ---------------------------------------------------------------------------
// Building
// ---------------------------------------------------------------------------

namespace {

std::string param_or(const Scenario::Instance& inst, const std::string& key,
                     const std::string& fallback) {
  auto it = inst.params.find(key);
  return it == inst.params.end() ? fallback : it->second;
}

std::optional<Bit> parse_initial(const Scenario::Instance& inst, const std::string& key) {
  auto it = inst.params.find(key);
  if (it == inst.params.end()) return std::nullopt;
  if (it->second == "O") return Bit::O;
  if (it->second == "L") return Bit::L;
  throw Error("instance '" + inst.id + "': " + key + " must be O or L");
}

Automaton instantiate(const Scenario::Instance& inst, std::optional<MediumSpec>& medium_out) {
  if (inst.kind == "fair_merge") {
    Automaton a = fair_merge(param_or(inst, "i", inst.id + ".i"), param_or(inst, "j", inst.id + ".j"),
                             param_or(inst, "o", inst.id + ".o"));
    a.name = inst.id;
    return a;
  }
  if (inst.kind == "buffer") {
    Automaton a = buffer(param_or(inst, "i", inst.id + ".i"), param_or(inst, "o", inst.id + ".o"));
    a.name = inst.id;
    return a;
  }
  if (inst.kind == "nor") {
    Automaton a = nor_gate(param_or(inst, "a", inst.id + ".a"), param_or(inst, "b", inst.id + ".b"),
                           param_or(inst, "o", inst.id + ".o"), parse_initial(inst, "initial"));
    a.name = inst.id;
    return a;
  }
  if (inst.kind == "queue_element") {
    return queue_element(inst.id, split_commas(param_or(inst, "creates", "")));
  }
  if (inst.kind == "queue") {
    QueueOptions opts;
    opts.batch = std::stoul(param_or(inst, "batch", "1"));
    opts.window = std::stoul(param_or(inst, "window", "0"));
    AssembledNetwork net = queue_network(std::stoul(param_or(inst, "pool", "4")), opts);
    medium_out = net.medium_spec;
    return net.automaton;
  }
  if (inst.kind == "flipflop") {
    AssembledNetwork net =
        flipflop_network(parse_initial(inst, "init1"), parse_initial(inst, "init2"));
    medium_out = net.medium_spec;
    return net.automaton;
  }
  throw Error("unknown kind '" + inst.kind + "'");
}

}  // namespace

std::vector<std::string> builtin_kinds() {
  return {"fair_merge", "buffer", "nor", "queue_element", "queue", "flipflop"};
}

BuiltNetwork build_network(const Scenario& s) {
  BuiltNetwork out;

  std::vector<FamilyMember> members;
  ChannelSet part_inputs, part_outputs;
  std::map<std::string, std::string> single_output;  // instance id -> its only output
  for (const auto& inst : s.instances) {
    std::optional<MediumSpec> inner_medium;
    Automaton a = instantiate(inst, inner_medium);
    if (inner_medium && !out.medium_spec) out.medium_spec = inner_medium;
    part_inputs = channels_union(part_inputs, a.sig.inputs);
    part_outputs = channels_union(part_outputs, a.sig.outputs);
    if (a.sig.outputs.size() == 1) single_output[inst.id] = *a.sig.outputs.begin();
    members.push_back({inst.id, std::move(a), true});
  }

  ChannelSet stimulus_channels;
  for (const auto& st : s.stimuli) stimulus_channels.insert(st.channel);

  bool routed = !s.wires.empty() || !s.route_lines.empty() || s.medium.has_value();
  if (routed) {
    // Membrane view: all traffic passes a medium; stimuli must address it.
    MediumSpec spec;
    spec.component = s.network_name;
    spec.delay = s.medium ? s.medium->delay : MediumSpec::Delay::passthrough;
    if (s.medium) {
      spec.window = s.medium->window;
      spec.batch = s.medium->batch;
    }

    ChannelSet external_in = channels_minus(stimulus_channels,
                                            channels_union(part_inputs, part_outputs));
    spec.origins = channels_union(external_in, part_outputs);

    auto wires = std::make_shared<std::map<std::string, std::vector<std::string>>>();
    ChannelSet wire_targets;
    for (const auto& [from, tos] : s.wires) {
      if (!spec.origins.count(from))
        throw Error("wire source '" + from + "' is neither a part output nor a stimulus channel");
      auto& entry = (*wires)[from];
      entry.insert(entry.end(), tos.begin(), tos.end());
      for (const auto& t : tos) wire_targets.insert(t);
    }
    std::shared_ptr<RoutingTable> table;
    ChannelSet route_targets;
    if (!s.route_lines.empty()) {
      std::string text;
      for (const auto& l : s.route_lines) text += l + "\n";
      table = std::make_shared<RoutingTable>(RoutingTable::parse(text));
      for (const auto& r : table->rules)
        for (const auto& d : r.dests) route_targets.insert(d);
    }
    ChannelSet targets = channels_union(wire_targets, route_targets);
    ChannelSet external_out = channels_minus(targets, part_inputs);
    spec.destinations = channels_union(external_out, part_inputs);

    auto ids = std::make_shared<std::map<std::string, std::string>>(single_output);
    spec.origin = [ids](const Message& m) -> std::optional<std::string> {
      if (!m.meta) return std::nullopt;
      auto it = ids->find(m.meta->sender);
      if (it != ids->end()) return it->second;
      return std::nullopt;
    };
    spec.destination = [wires, table](const Message& m,
                                      const std::string& origin) -> std::vector<std::string> {
      auto it = wires->find(origin);
      if (it != wires->end()) return it->second;
      if (table) return table->route(m);
      return {};
    };

    Automaton medium = medium_automaton(spec);
    members.push_back({"_cm", medium, true});
    if (!out.medium_spec) out.medium_spec = spec;

    FamilySpec family;
    family.name = s.network_name;
    family.members = std::move(members);
    Automaton composite = compose_family(family);
    out.automaton = hide(composite, channels_union(part_inputs, part_outputs));
  } else if (members.size() == 1) {
    out.automaton = std::move(members.front().automaton);
  } else {
    FamilySpec family;
    family.name = s.network_name;
    family.members = std::move(members);
    out.automaton = compose_family(family);
  }
  out.automaton.name = s.network_name;

  out.input = TimedTrace(out.automaton.sig.inputs, s.horizon);
  for (const auto& st : s.stimuli) {
    if (!out.automaton.sig.inputs.count(st.channel))
      throw Error("stimulus channel '" + st.channel + "' is not an external input");
    for (std::size_t n = st.from; n <= std::min(st.to, s.horizon); ++n) {
      NamedSeq tick = out.input.tick(n);
      MsgSeq seq = tick.at(st.channel);
      seq.insert(seq.end(), st.msgs.begin(), st.msgs.end());
      tick.set(st.channel, std::move(seq));
      out.input.set_tick(n, std::move(tick));
    }
  }
  return out;
}

TimedTrace run_scenario(const Scenario& s) {
  BuiltNetwork net = build_network(s);
  Execution e = execute(net.automaton, net.input, s.policy);
  return behavior_of(net.automaton, e);
}

// ---------------------------------------------------------------------------
// Property checks
// ---------------------------------------------------------------------------

namespace {

CheckOutcome stability_check(const Scenario& s, std::size_t k) {
  CheckOutcome out;
  if (k < 1 || k > s.horizon) {
    out.report = "stability tick out of range";
    return out;
  }
  TimedTrace beh = run_scenario(s);
  BuiltNetwork net = build_network(s);
  TimedTrace outputs = project_trace(beh, net.automaton.sig.outputs);
  for (std::size_t n = k + 1; n <= outputs.horizon(); ++n) {
    if (outputs.tick(n) != outputs.tick(k)) {
      out.report = "outputs change at tick " + std::to_string(n) + ":\n  tick " +
                   std::to_string(k) + ": " + outputs.tick(k).to_string() + "\n  tick " +
                   std::to_string(n) + ": " + outputs.tick(n).to_string();
      return out;
    }
  }
  out.pass = true;
  out.report = "outputs constant from tick " + std::to_string(k) + " through " +
               std::to_string(outputs.horizon());
  return out;
}

}  // namespace

CheckOutcome check_scenario(const Scenario& s, const std::string& property, std::size_t samples,
                            std::size_t budget) {
  CheckOutcome out;
  if (property.rfind("stability", 0) == 0) {
    std::size_t k = 3;
    auto open = property.find('(');
    auto close = property.find(')');
    if (open != std::string::npos && close != std::string::npos && close > open + 1)
      k = std::stoul(property.substr(open + 1, close - open - 1));
    return stability_check(s, k);
  }

  BuiltNetwork net = build_network(s);
  if (property == "reactivity") {
    bool exhaustive = net.automaton.state_hint.has_value();
    for (const auto& c : net.automaton.sig.inputs)
      if (!net.automaton.bound_hint.count(c) || !net.automaton.sig.alphabet.count(c))
        exhaustive = false;
    ReactivityReport r = check_reactivity(
        net.automaton, exhaustive ? ReactivityMode::exhaustive : ReactivityMode::sampled, budget,
        s.seed);
    out.pass = r.ok();
    std::ostringstream os;
    os << (r.exhaustive ? "exhaustive" : "sampled") << " reactivity: "
       << (r.ok() ? "pass" : "FAIL") << " (" << r.probes << " probes)";
    if (r.witness)
      os << "\nwitness state " << r.witness->first.to_string() << " input "
         << r.witness->second.to_string();
    if (!r.detail.empty()) os << "\n" << r.detail;
    out.report = os.str();
    return out;
  }
  if (property == "weak-pulse" || property == "strong-pulse") {
    PulseReport r =
        property == "weak-pulse"
            ? check_weak_pulse(net.automaton, s.horizon, samples, s.policy)
            : check_strong_pulse(net.automaton, net.automaton.sig.inputs,
                                 net.automaton.sig.outputs, s.horizon, samples, s.policy);
    out.pass = r.ok;
    out.report = property + ": " + (r.ok ? "no counterexample in " + std::to_string(r.samples) +
                                               " samples"
                                         : "counterexample found\n" + r.witness);
    return out;
  }
  if (property == "medium-laws") {
    if (!net.medium_spec) {
      out.report = "scenario has no communication medium";
      return out;
    }
    TimedTrace workload(net.medium_spec->origins, s.horizon);
    for (std::size_t n = 1; n <= s.horizon; ++n) {
      NamedSeq tick = NamedSeq::empty_on(net.medium_spec->origins);
      for (const auto& [c, msgs] : net.input.tick(n).entries())
        if (net.medium_spec->origins.count(c)) tick.set(c, msgs);
      workload.set_tick(n, std::move(tick));
    }
    MediumLawReport r = check_medium_laws(*net.medium_spec, workload);
    out.pass = r.ok;
    std::ostringstream os;
    for (const auto& l : r.laws)
      os << l.law << ": " << (l.ok ? "pass" : "FAIL " + l.witness) << "\n";
    out.report = os.str();
    return out;
  }
  out.report = "unknown property '" + property +
               "' (try reactivity, weak-pulse, strong-pulse, medium-laws, stability(k))";
  return out;
}

}  // namespace tpa
