#include "tpa/sysmodel.hpp"

#include <algorithm>
#include <sstream>

#include "tpa/errors.hpp"

namespace tpa {

// ---------------------------------------------------------------------------
// Hierarchy
// ---------------------------------------------------------------------------

Hierarchy::Hierarchy(std::string root) : root_(std::move(root)) {
  nodes_[root_] = Node{};
}

const Hierarchy::Node& Hierarchy::node(const std::string& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("unknown component id '" + id + "'");
  return it->second;
}

void Hierarchy::claim_ports(const std::string& id, const ChannelSet& in, const ChannelSet& out) {
  for (const auto& p : in)
    if (out.count(p)) throw Error("port '" + p + "' declared both input and output of '" + id + "'");
  for (const auto& p : channels_union(in, out)) {
    auto [it, fresh] = port_owner_.emplace(p, id);
    if (!fresh) throw Error("port '" + p + "' already owned by '" + it->second + "'");
  }
}

void Hierarchy::add(const std::string& id, const std::string& parent, ChannelSet in_ports,
                    ChannelSet out_ports) {
  if (nodes_.count(id)) throw Error("component id '" + id + "' already present");
  if (!nodes_.count(parent)) throw Error("unknown parent '" + parent + "'");
  claim_ports(id, in_ports, out_ports);
  nodes_[parent].parts.insert(id);
  nodes_[id] = Node{parent, {}, std::move(in_ports), std::move(out_ports)};
}

void Hierarchy::set_ports(const std::string& id, ChannelSet in_ports, ChannelSet out_ports) {
  Node& n = nodes_.at(id);
  for (const auto& p : channels_union(n.in, n.out)) port_owner_.erase(p);
  claim_ports(id, in_ports, out_ports);
  n.in = std::move(in_ports);
  n.out = std::move(out_ports);
}

const std::set<std::string>& Hierarchy::parts(const std::string& id) const { return node(id).parts; }
const ChannelSet& Hierarchy::in_ports(const std::string& id) const { return node(id).in; }
const ChannelSet& Hierarchy::out_ports(const std::string& id) const { return node(id).out; }

std::vector<std::string> Hierarchy::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : nodes_) out.push_back(id);
  return out;
}

ChannelSet Hierarchy::origins_of(const std::string& id) const {
  ChannelSet out = in_ports(id);
  for (const auto& p : parts(id)) out = channels_union(out, out_ports(p));
  return out;
}

ChannelSet Hierarchy::destinations_of(const std::string& id) const {
  ChannelSet out = out_ports(id);
  for (const auto& p : parts(id)) out = channels_union(out, in_ports(p));
  return out;
}

void Hierarchy::validate() const {
  // Reachability from the root; parenthood is acyclic by construction.
  std::set<std::string> seen{root_};
  std::vector<std::string> frontier{root_};
  while (!frontier.empty()) {
    std::string id = frontier.back();
    frontier.pop_back();
    for (const auto& p : node(id).parts) {
      if (!seen.insert(p).second) throw Error("component '" + p + "' reachable twice");
      frontier.push_back(p);
    }
  }
  if (seen.size() != nodes_.size()) throw Error("components unreachable from the root");
}

// ---------------------------------------------------------------------------
// Medium
// ---------------------------------------------------------------------------

std::vector<std::string> MediumSpec::fairness_cycle() const {
  std::vector<std::string> cycle(destinations.begin(), destinations.end());
  for (std::size_t i = 0; i < nil_slots; ++i) cycle.push_back("");  // idle slot
  return cycle;
}

NamedSeq distribute(const MediumSpec& spec, const NamedSeq& theta) {
  NamedSeq out = NamedSeq::empty_on(spec.destinations);
  for (const auto& [o, msgs] : theta.entries()) {
    for (const auto& m : msgs) {
      if (spec.origin) {
        auto expect = spec.origin(m);
        if (expect && *expect != o) throw OriginMismatch(m.render(), o);
      }
      std::vector<std::string> dests = spec.destination(m, o);
      std::sort(dests.begin(), dests.end());
      dests.erase(std::unique(dests.begin(), dests.end()), dests.end());
      if (dests.empty() && spec.no_loss) throw LostMessage(m.render());
      for (const auto& d : dests) {
        if (!spec.destinations.count(d))
          throw Error("destination '" + d + "' outside the medium signature");
        out.append(d, m);
      }
    }
  }
  return out;
}

namespace {

using Buffers = std::map<std::string, MsgSeq>;

Value encode_msgs(const MsgSeq& s) {
  Value::List xs;
  for (const auto& m : s) xs.emplace_back(m);
  return Value(std::move(xs));
}

MsgSeq decode_msgs(const Value& v) {
  MsgSeq out;
  for (const auto& x : v.as_list()) out.push_back(x.as_msg());
  return out;
}

Value encode_medium_state(const MediumSpec& spec, const Buffers& bufs, std::int64_t cursor) {
  Value::List entries;
  for (const auto& d : spec.destinations) {
    auto it = bufs.find(d);
    entries.push_back(Value(Value::List{Value(d), encode_msgs(it == bufs.end() ? MsgSeq{} : it->second)}));
  }
  return Value(Value::List{Value(std::move(entries)), Value(cursor)});
}

void decode_medium_state(const Value& v, Buffers& bufs, std::int64_t& cursor) {
  const auto& pair = v.as_list();
  for (const auto& e : pair[0].as_list()) {
    const auto& kv = e.as_list();
    bufs[kv[0].as_str()] = decode_msgs(kv[1]);
  }
  cursor = pair[1].as_int();
}

MsgSeq concat(const MsgSeq& a, const MsgSeq& b) {
  MsgSeq out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Emits every per-channel prefix split of `source`, canonical split first.
/// `min_len` forces nonempty emission on the fairness slot.
void enumerate_splits(const std::vector<std::string>& chans, const Buffers& source,
                      const std::map<std::string, std::size_t>& min_len,
                      const std::map<std::string, std::size_t>& canonical,
                      const std::function<bool(const Buffers& out, const Buffers& rest)>& fn) {
  auto build = [&](const std::map<std::string, std::size_t>& lens, Buffers& out, Buffers& rest) {
    for (const auto& c : chans) {
      const MsgSeq& src = source.at(c);
      std::size_t l = lens.at(c);
      out[c] = MsgSeq(src.begin(), src.begin() + l);
      rest[c] = MsgSeq(src.begin() + l, src.end());
    }
  };
  {
    Buffers out, rest;
    build(canonical, out, rest);
    if (!fn(out, rest)) return;
  }
  // Odometer over all admissible length vectors, skipping the canonical one.
  std::map<std::string, std::size_t> lens;
  for (const auto& c : chans) lens[c] = min_len.at(c);
  while (true) {
    if (lens != canonical) {
      Buffers out, rest;
      build(lens, out, rest);
      if (!fn(out, rest)) return;
    }
    std::size_t i = 0;
    for (; i < chans.size(); ++i) {
      const auto& c = chans[i];
      if (++lens[c] <= source.at(c).size()) break;
      lens[c] = min_len.at(c);
    }
    if (i == chans.size()) return;
  }
}

}  // namespace

Automaton medium_automaton(const MediumSpec& spec) {
  if (!channels_intersect(spec.origins, spec.destinations).empty())
    throw IncompatibleSignatures(*channels_intersect(spec.origins, spec.destinations).begin());
  MediumSpec s = spec;  // captured by the generator

  Automaton a;
  a.name = "cm." + (spec.component.empty() ? std::string("medium") : spec.component);
  a.sig.inputs = spec.origins;
  a.sig.outputs = spec.destinations;

  if (spec.delay == MediumSpec::Delay::passthrough) {
    a.initial_states = {Value()};
    a.state_hint = std::vector<Value>{Value()};
    a.transitions = [s](const Value&, const NamedSeq& input, const TransitionSink& sink) {
      NamedSeq out = distribute(s, input);
      sink(Transition{sum(input, out), Value()});
    };
    return a;
  }

  const auto cycle = spec.fairness_cycle();
  Buffers empty;
  for (const auto& d : spec.destinations) empty[d] = {};
  a.initial_states = {encode_medium_state(spec, empty, 0)};

  const bool strong = spec.delay == MediumSpec::Delay::cmas;
  a.transitions = [s, cycle, strong](const Value& state, const NamedSeq& input,
                                     const TransitionSink& sink) {
    Buffers buf;
    std::int64_t cursor = 0;
    decode_medium_state(state, buf, cursor);
    const std::string& slot = cycle[static_cast<std::size_t>(cursor) % cycle.size()];
    std::int64_t next_cursor = (cursor + 1) % static_cast<std::int64_t>(cycle.size());
    NamedSeq dist = distribute(s, input);

    // Emission source: stored-plus-fresh for cma, stored only for cmas.
    Buffers source;
    std::vector<std::string> chans;
    for (const auto& d : s.destinations) {
      chans.push_back(d);
      source[d] = strong ? buf[d] : concat(buf[d], dist.at(d));
    }

    auto emit = [&](const Buffers& out, const Buffers& rest) {
      NamedSeq phi;
      Buffers next;
      for (const auto& d : s.destinations) {
        phi.set(d, out.at(d));
        next[d] = strong ? concat(rest.at(d), dist.at(d)) : rest.at(d);
      }
      return sink(Transition{sum(input, phi), encode_medium_state(s, next, next_cursor)});
    };

    if (slot.empty()) {
      // Idle slot: no output, arrivals are buffered.
      Buffers out, rest;
      for (const auto& d : s.destinations) {
        out[d] = {};
        rest[d] = source[d];
      }
      emit(out, rest);
      return;
    }

    std::map<std::string, std::size_t> min_len, canonical;
    for (const auto& d : s.destinations) {
      min_len[d] = 0;
      canonical[d] = 0;
    }
    if (!buf[slot].empty()) min_len[slot] = 1;  // progress on the selected slot
    std::size_t avail = source[slot].size();
    canonical[slot] = s.batch == 0 ? avail : std::min(s.batch, avail);

    enumerate_splits(chans, source, min_len, canonical, emit);
  };

  if (strong) a.moore.push_back({a.sig.inputs, a.sig.outputs, true});
  return a;
}

bool cma_admits(const MediumSpec& spec, const Value& state, const NamedSeq& input,
                const NamedSeq& action_out, const Value& next) {
  Buffers buf;
  std::int64_t cursor = 0;
  decode_medium_state(state, buf, cursor);
  const auto cycle = spec.fairness_cycle();
  const std::string& slot = cycle[static_cast<std::size_t>(cursor) % cycle.size()];
  NamedSeq dist = distribute(spec, input);

  Buffers next_buf;
  std::int64_t next_cursor = 0;
  decode_medium_state(next, next_buf, next_cursor);
  if (next_cursor != (cursor + 1) % static_cast<std::int64_t>(cycle.size())) return false;

  if (slot.empty()) {
    // Idle slot admits only the silent transition.
    for (const auto& d : spec.destinations)
      if (!action_out.get_or_empty(d).empty() ||
          next_buf[d] != concat(buf[d], dist.at(d)))
        return false;
    return true;
  }
  for (const auto& d : spec.destinations) {
    MsgSeq avail = concat(buf[d], dist.at(d));
    const MsgSeq& phi = action_out.get_or_empty(d);
    if (phi.size() > avail.size()) return false;
    if (!std::equal(phi.begin(), phi.end(), avail.begin())) return false;
    if (next_buf[d] != MsgSeq(avail.begin() + phi.size(), avail.end())) return false;
  }
  if (!buf[slot].empty() && action_out.get_or_empty(slot).empty()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Medium laws
// ---------------------------------------------------------------------------

std::string MediumLawReport::first_violation() const {
  for (const auto& l : laws)
    if (!l.ok) return l.law + ": " + l.witness;
  return "";
}

MediumLawReport check_medium_laws(const MediumSpec& spec, const TimedTrace& workload) {
  if (!spec.origin) throw Error("check_medium_laws requires a total origin mapping");
  if (workload.channels() != spec.origins)
    throw ChannelMismatch("workload channels must be the medium origins");

  MediumLawReport report;
  report.laws = {{"order-preservation", true, ""},      {"no-generation", true, ""},
                 {"no-modification", true, ""},         {"exactly-once", true, ""},
                 {"destination-independence", true, ""}, {"window-delivery", true, ""}};
  LawResult& order = report.laws[0];
  LawResult& generation = report.laws[1];
  LawResult& modification = report.laws[2];
  LawResult& once = report.laws[3];
  LawResult& independence = report.laws[4];
  LawResult& window = report.laws[5];

  const std::size_t w = spec.fairness_window();
  const std::size_t total = workload.horizon() + w;

  struct Instance {
    Message m;
    std::size_t sent_tick;
    bool delivered = false;
    std::size_t delivered_tick = 0;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Instance>> ledger;
  std::map<std::pair<std::string, std::string>, std::size_t> cursor;

  TimedTrace input(spec.origins, total);
  for (std::size_t n = 1; n <= workload.horizon(); ++n) input.set_tick(n, workload.tick(n));
  for (std::size_t n = 1; n <= workload.horizon(); ++n) {
    for (const auto& [o, msgs] : workload.tick(n).entries()) {
      for (const auto& m : msgs) {
        auto org = spec.origin(m);
        if (!org) throw Error("origin mapping not total on " + m.render());
        auto dests = spec.destination(m, o);
        std::sort(dests.begin(), dests.end());
        dests.erase(std::unique(dests.begin(), dests.end()), dests.end());
        for (const auto& d : dests) ledger[{o, d}].push_back({m, n});
      }
    }
  }

  Automaton medium = medium_automaton(spec);
  Execution e = execute(medium, input, ChoicePolicy::first_choice());

  for (std::size_t n = 1; n <= total; ++n) {
    for (const auto& d : spec.destinations) {
      for (const auto& m : e.actions.tick(n).at(d)) {
        std::string o = spec.origin(m).value_or("?");
        auto key = std::make_pair(o, d);
        auto routed = spec.destination(m, o);
        if (std::find(routed.begin(), routed.end(), d) == routed.end() && independence.ok) {
          independence.ok = false;
          independence.witness = m.render() + " delivered on '" + d + "' which is not a routed destination";
          continue;
        }
        auto& instances = ledger[key];
        std::size_t& pos = cursor[key];
        if (pos >= instances.size()) {
          generation.ok = false;
          generation.witness = "extra delivery of " + m.render() + " on '" + d + "' at tick " +
                               std::to_string(n);
          continue;
        }
        if (!(instances[pos].m == m)) {
          bool later = false;
          for (std::size_t k = pos + 1; k < instances.size(); ++k)
            if (instances[k].m == m) later = true;
          LawResult& broken = later ? order : modification;
          if (broken.ok) {
            broken.ok = false;
            broken.witness = "expected " + instances[pos].m.render() + " on '" + d +
                             "' but saw " + m.render() + " at tick " + std::to_string(n);
          }
          ++pos;
          continue;
        }
        instances[pos].delivered = true;
        instances[pos].delivered_tick = n;
        ++pos;
      }
    }
  }

  for (const auto& [key, instances] : ledger) {
    for (const auto& inst : instances) {
      if (!inst.delivered && once.ok) {
        once.ok = false;
        once.witness = inst.m.render() + " sent at tick " + std::to_string(inst.sent_tick) +
                       " toward '" + key.second + "' never delivered by tick " +
                       std::to_string(total);
      }
      if (inst.delivered && inst.delivered_tick > inst.sent_tick + w && window.ok) {
        window.ok = false;
        window.witness = inst.m.render() + " took " +
                         std::to_string(inst.delivered_tick - inst.sent_tick) +
                         " ticks toward '" + key.second + "' (window " + std::to_string(w) + ")";
      }
    }
  }

  for (const auto& l : report.laws) report.ok = report.ok && l.ok;
  return report;
}

// ---------------------------------------------------------------------------
// Routing tables
// ---------------------------------------------------------------------------

RoutingTable RoutingTable::parse(const std::string& text) {
  RoutingTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw != "route") throw ParseError(lineno, "expected 'route'");
    std::string pattern, arrow, dests;
    if (!(ls >> pattern >> arrow) || arrow != "->") throw ParseError(lineno, "expected '<pattern> -> <dests>'");
    std::getline(ls, dests);

    Rule rule;
    auto at = pattern.find('@');
    if (at == std::string::npos) {
      rule.sort = pattern;
    } else {
      rule.sort = pattern.substr(0, at);
      std::string meta = pattern.substr(at + 1);
      auto arrow2 = meta.find("->");
      if (arrow2 == std::string::npos) throw ParseError(lineno, "meta pattern needs '<sender>-><receiver>'");
      rule.match_meta = true;
      rule.sender = meta.substr(0, arrow2);
      rule.receiver = meta.substr(arrow2 + 2);
    }
    if (rule.sort.empty()) throw ParseError(lineno, "empty sort pattern");

    std::string token;
    std::istringstream ds(dests);
    while (std::getline(ds, token, ',')) {
      auto b = token.find_first_not_of(" \t");
      auto e = token.find_last_not_of(" \t");
      if (b == std::string::npos) continue;
      rule.dests.push_back(token.substr(b, e - b + 1));
    }
    if (rule.dests.empty()) throw ParseError(lineno, "no destination");
    if (rule.dests.size() == 1 && rule.dests[0] == "drop") {
      rule.dests.clear();
    } else if (rule.dests.size() == 1 && rule.dests[0] == "error") {
      rule.dests.clear();
      rule.error_on_match = true;
    }
    table.rules.push_back(std::move(rule));
  }
  if (table.rules.empty() || table.rules.back().sort != "*" || table.rules.back().match_meta)
    throw ParseError(lineno, "routing table must end with 'route * -> drop|error'");
  return table;
}

std::vector<std::string> RoutingTable::route(const Message& m) const {
  auto match = [](const std::string& pattern, const std::string& value) {
    return pattern == "*" || pattern == value;
  };
  for (const auto& r : rules) {
    if (!match(r.sort, m.sort)) continue;
    if (r.match_meta) {
      std::string sender = m.meta ? m.meta->sender : "";
      std::string receiver = m.meta ? m.meta->receiver : "";
      if (!match(r.sender, sender) || !match(r.receiver, receiver)) continue;
    }
    if (r.error_on_match) throw LostMessage(m.render());
    return r.dests;
  }
  throw LostMessage(m.render());
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

Assembly assemble(const Hierarchy& h, const std::string& c,
                  const std::map<std::string, Automaton>& parts, const MediumSpec& spec,
                  const AssembleOptions& options) {
  h.validate();
  if (h.is_basic(c)) throw Error("'" + c + "' is a basic component, nothing to assemble");

  ChannelSet in_parts, out_parts;
  for (const auto& p : h.parts(c)) {
    auto it = parts.find(p);
    if (it == parts.end()) throw SignatureMismatch("no automaton for part '" + p + "'");
    if (it->second.sig.inputs != h.in_ports(p) || it->second.sig.outputs != h.out_ports(p))
      throw SignatureMismatch("automaton for '" + p + "' does not match its declared ports");
    in_parts = channels_union(in_parts, h.in_ports(p));
    out_parts = channels_union(out_parts, h.out_ports(p));
  }

  MediumSpec medium_spec = spec;
  medium_spec.component = c;
  medium_spec.origins = h.origins_of(c);
  medium_spec.destinations = h.destinations_of(c);

  bool medium_strong = medium_spec.delay == MediumSpec::Delay::cmas;
  bool parts_strong = true;
  for (const auto& p : h.parts(c)) {
    const Automaton& a = parts.at(p);
    if (!a.has_verified_moore(a.sig.inputs, a.sig.outputs)) parts_strong = false;
  }
  if (!medium_strong && !parts_strong)
    throw PotentialBlocking(
        "assembling '" + c +
        "': the medium is not strongly pulse-driven and neither are all parts");

  Assembly out;
  out.medium = medium_automaton(medium_spec);

  FamilySpec family;
  family.name = c;
  family.max_live = options.max_live;
  family.members.push_back({"_cm", out.medium, true});
  for (const auto& p : h.parts(c)) {
    bool live = options.initially_live.empty() || options.initially_live.count(p) != 0;
    family.members.push_back({p, parts.at(p), live});
    out.part_ids.push_back(p);
  }
  out.composite = compose_family(family);
  out.automaton = hide(out.composite, channels_union(in_parts, out_parts));
  out.automaton.name = c;

  // The hidden outputs all come from the medium's state when it is strongly
  // pulse-driven; with moore parts and no environment-to-environment route,
  // the same holds through the zero-delay medium.
  if (medium_strong || (parts_strong && !medium_spec.env_to_env)) {
    if (!out.automaton.has_verified_moore(out.automaton.sig.inputs, out.automaton.sig.outputs))
      out.automaton.moore.push_back(
          {out.automaton.sig.inputs, out.automaton.sig.outputs, true});
  }
  return out;
}

}  // namespace tpa
