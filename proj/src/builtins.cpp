#include "tpa/builtins.hpp"
#include <memory>

#include <algorithm>

#include "tpa/errors.hpp"

namespace tpa {

namespace {

void merge_rec(const MsgSeq& a, std::size_t ia, const MsgSeq& b, std::size_t ib, MsgSeq& acc,
               bool& go, const std::function<bool(const MsgSeq&)>& fn) {
  if (!go) return;
  if (ia == a.size() && ib == b.size()) {
    go = fn(acc);
    return;
  }
  if (ia < a.size()) {
    acc.push_back(a[ia]);
    merge_rec(a, ia + 1, b, ib, acc, go, fn);
    acc.pop_back();
  }
  if (go && ib < b.size()) {
    acc.push_back(b[ib]);
    merge_rec(a, ia, b, ib + 1, acc, go, fn);
    acc.pop_back();
  }
}

}  // namespace

Automaton fair_merge(const std::string& i, const std::string& j, const std::string& o) {
  Automaton a;
  a.name = "fair_merge";
  a.sig.inputs = {i, j};
  a.sig.outputs = {o};
  a.sig.alphabet[i] = {int_msg(0), int_msg(1)};
  a.sig.alphabet[j] = {int_msg(0), int_msg(1)};
  a.bound_hint = {{i, 2}, {j, 2}};
  a.initial_states = {Value()};
  a.state_hint = std::vector<Value>{Value()};
  a.transitions = [i, j, o](const Value&, const NamedSeq& input, const TransitionSink& sink) {
    const MsgSeq& sa = input.at(i);
    const MsgSeq& sb = input.at(j);
    MsgSeq acc;
    bool go = true;
    merge_rec(sa, 0, sb, 0, acc, go, [&](const MsgSeq& c) {
      NamedSeq action = input;
      action.set(o, c);
      return sink(Transition{action, Value()});
    });
  };
  return a;
}

Automaton buffer(const std::string& i, const std::string& o) {
  Automaton a;
  a.name = "buffer";
  a.sig.inputs = {i};
  a.sig.outputs = {o};
  a.sig.alphabet[i] = {int_msg(0), int_msg(1)};
  a.bound_hint = {{i, 2}};
  a.initial_states = {Value(Value::List{})};
  a.transitions = [i, o](const Value& state, const NamedSeq& input, const TransitionSink& sink) {
    const Value::List& buf = state.as_list();
    const MsgSeq& fresh = input.at(i);
    auto emit = [&](std::size_t k) {
      MsgSeq out;
      Value::List rest;
      for (std::size_t n = 0; n < buf.size(); ++n)
        (n < k ? static_cast<void>(out.push_back(buf[n].as_msg())) : rest.push_back(buf[n]));
      for (const auto& m : fresh) rest.emplace_back(m);
      NamedSeq action = input;
      action.set(o, std::move(out));
      return sink(Transition{action, Value(std::move(rest))});
    };
    if (buf.empty()) {
      emit(0);
      return;
    }
    for (std::size_t k = 1; k <= buf.size(); ++k)
      if (!emit(k)) return;
  };
  a.moore.push_back({{i}, {o}, true});  // emission comes from the pre-tick buffer
  return a;
}

Message bit_msg(Bit b) { return Message("bit", b == Bit::O ? "O" : "L"); }

std::optional<Bit> parse_bit(const Message& m) {
  if (m.sort != "bit") return std::nullopt;
  if (m.payload == "O") return Bit::O;
  if (m.payload == "L") return Bit::L;
  return std::nullopt;
}

Automaton nor_gate(const std::string& a_ch, const std::string& b_ch, const std::string& o_ch,
                   std::optional<Bit> initial) {
  Automaton a;
  a.name = "nor";
  a.sig.inputs = {a_ch, b_ch};
  a.sig.outputs = {o_ch};
  a.sig.alphabet[a_ch] = {bit_msg(Bit::O), bit_msg(Bit::L)};
  a.sig.alphabet[b_ch] = {bit_msg(Bit::O), bit_msg(Bit::L)};
  a.bound_hint = {{a_ch, 2}, {b_ch, 2}};
  a.state_hint = std::vector<Value>{Value("O"), Value("L")};
  if (initial) {
    a.initial_states = {Value(*initial == Bit::O ? "O" : "L")};
  } else {
    a.initial_states = {Value("O"), Value("L")};
  }
  a.transitions = [a_ch, b_ch, o_ch](const Value& state, const NamedSeq& input,
                                     const TransitionSink& sink) {
    const MsgSeq& sa = input.at(a_ch);
    const MsgSeq& sb = input.at(b_ch);
    NamedSeq action = input;
    action.set(o_ch, {Message("bit", state.as_str())});
    Value next = state;  // irregular input: hold
    if (sa.size() == 1 && sb.size() == 1) {
      auto va = parse_bit(sa[0]);
      auto vb = parse_bit(sb[0]);
      if (va && vb)
        next = Value((*va == Bit::O && *vb == Bit::O) ? "L" : "O");
    }
    sink(Transition{action, next});
  };
  a.moore.push_back({{a_ch, b_ch}, {o_ch}, true});  // output is the pre-tick state
  return a;
}

Automaton prepend_one(const std::string& in, const std::string& out) {
  Automaton a;
  a.name = "prepend_one";
  a.sig.inputs = {in};
  a.sig.outputs = {out};
  a.sig.alphabet[in] = {int_msg(1)};
  a.bound_hint = {{in, 2}};
  a.initial_states = {Value()};
  a.state_hint = std::vector<Value>{Value()};
  a.transitions = [in, out](const Value&, const NamedSeq& input, const TransitionSink& sink) {
    MsgSeq o = {int_msg(1)};
    for (const auto& m : input.at(in)) o.push_back(m);
    NamedSeq action = input;
    action.set(out, std::move(o));
    sink(Transition{action, Value()});
  };
  return a;
}

// ---------------------------------------------------------------------------
// Queue
// ---------------------------------------------------------------------------

Message enq_msg(const std::string& value, const std::string& sender, const std::string& receiver) {
  return Message("enq", value, sender, receiver);
}

Message deq_msg(const std::string& reply_to, const std::string& sender,
                const std::string& receiver) {
  return Message("deq", reply_to, sender, receiver);
}

Message deqd_msg(const std::string& value, const std::string& next, const std::string& sender,
                 const std::string& receiver) {
  return Message("deqd", value + "," + next, sender, receiver);
}

std::pair<std::string, std::string> parse_deqd(const Message& m) {
  auto comma = m.payload.find(',');
  if (m.sort != "deqd" || comma == std::string::npos)
    throw Error("not a deqd message: " + m.render());
  return {m.payload.substr(0, comma), m.payload.substr(comma + 1)};
}

namespace {

constexpr const char* kChaotic = "chaotic";
constexpr const char* kExhausted = "pool-exhausted";

struct ElementState {
  Value val;   // unit when empty
  Value next;  // unit when no successor
  Value::List creatable;
};

Value encode_element(const ElementState& s) {
  return Value(Value::List{s.val, s.next, Value(s.creatable)});
}

bool is_marker(const Value& v) { return v.is_str(); }

}  // namespace

Automaton queue_element(const std::string& id, std::vector<std::string> creatable) {
  Automaton a;
  a.name = id;
  std::string in = id + ".i";
  std::string out = id + ".o";
  a.sig.inputs = {in};
  a.sig.outputs = {out};
  a.sig.alphabet[in] = {enq_msg("0", "env", id), enq_msg("1", "env", id),
                        deq_msg("env", "env", id), deqd_msg("9", "q9", "q9", id)};
  a.bound_hint = {{in, 2}};

  ElementState init;
  for (const auto& c : creatable) init.creatable.emplace_back(c);
  a.initial_states = {encode_element(init)};

  a.transitions = [id, in, out](const Value& state, const NamedSeq& input,
                                const TransitionSink& sink) {
    Value cur = state;
    MsgSeq replies;
    for (const auto& m : input.at(in)) {
      if (is_marker(cur)) break;
      const Value::List& fields = cur.as_list();
      ElementState s{fields[0], fields[1], fields[2].as_list()};
      if (m.sort == "enq") {
        if (s.val.is_unit()) {
          if (s.creatable.empty()) {
            cur = Value(kExhausted);
          } else {
            s.val = Value(m.payload);
            s.next = s.creatable.front();
            s.creatable.erase(s.creatable.begin());
            cur = encode_element(s);
          }
        } else if (s.next.is_str()) {
          replies.push_back(enq_msg(m.payload, id, s.next.as_str()));
        } else {
          cur = Value(kChaotic);
        }
      } else if (m.sort == "deq" && s.val.is_str() && s.next.is_str()) {
        replies.push_back(deqd_msg(s.val.as_str(), s.next.as_str(), id, m.payload));
      } else {
        cur = Value(kChaotic);
      }
    }
    if (is_marker(cur)) replies.clear();  // markers absorb silently
    NamedSeq action = input;
    action.set(out, std::move(replies));
    sink(Transition{action, cur});
  };
  return a;
}

AssembledNetwork queue_network(std::size_t pool, const QueueOptions& options) {
  if (pool < 1) throw Error("queue_network: pool must be at least 1");

  // pool + 1 elements: the k-th value is absorbed by element k-1, which
  // allocates element k as its successor; pool values fit before exhaustion.
  std::vector<std::string> ids;
  for (std::size_t k = 0; k <= pool; ++k) ids.push_back("q" + std::to_string(k));
  auto id_set = std::make_shared<std::set<std::string>>(ids.begin(), ids.end());

  Hierarchy h;
  h.add("qu", h.root(), {"qu.i"}, {"qu.o"});
  std::map<std::string, Automaton> parts;
  for (std::size_t k = 0; k < pool; ++k) {
    h.add(ids[k], "qu", {ids[k] + ".i"}, {ids[k] + ".o"});
    std::vector<std::string> creatable;
    if (k + 1 < pool) creatable.push_back(ids[k + 1]);
    parts[ids[k]] = queue_element(ids[k], creatable);
  }

  MediumSpec spec;
  spec.delay = MediumSpec::Delay::cmas;
  spec.batch = options.batch;
  spec.window = options.window;
  spec.nil_slots = options.nil_slots;
  spec.no_loss = true;
  spec.env_to_env = true;  // a reply to the environment does route qu.i -> qu.o
  spec.origin = [id_set](const Message& m) -> std::optional<std::string> {
    if (!m.meta) return std::nullopt;
    return id_set->count(m.meta->sender) ? m.meta->sender + ".o" : std::string("qu.i");
  };
  spec.destination = [id_set](const Message& m, const std::string&) -> std::vector<std::string> {
    if (!m.meta) return {};
    if (id_set->count(m.meta->receiver)) return {m.meta->receiver + ".i"};
    return {"qu.o"};
  };

  AssembleOptions opts;
  opts.initially_live = {ids.front()};
  Assembly assembly = assemble(h, "qu", parts, spec, opts);

  AssembledNetwork net;
  net.automaton = std::move(assembly.automaton);
  net.composite = std::move(assembly.composite);
  net.medium = std::move(assembly.medium);
  net.part_ids = std::move(assembly.part_ids);
  net.medium_spec = spec;
  net.automaton.name = "queue";
  net.automaton.sig.alphabet["qu.i"] = {enq_msg("0", "env", "q0"), enq_msg("1", "env", "q0"),
                                        deq_msg("env", "env", "q0")};
  return net;
}

AssembledNetwork flipflop_network(std::optional<Bit> init1, std::optional<Bit> init2) {
  Hierarchy h;
  h.add("ff", h.root(), {"s", "r"}, {"q", "qbar"});
  h.add("nor1", "ff", {"a1", "b1"}, {"o1"});
  h.add("nor2", "ff", {"a2", "b2"}, {"o2"});

  std::map<std::string, Automaton> parts;
  parts["nor1"] = nor_gate("a1", "b1", "o1", init1);
  parts["nor2"] = nor_gate("a2", "b2", "o2", init2);

  MediumSpec spec;
  spec.delay = MediumSpec::Delay::passthrough;
  spec.no_loss = true;
  spec.env_to_env = false;  // s and r go to the gates only
  spec.origin = [](const Message&) -> std::optional<std::string> { return std::nullopt; };
  auto wires = std::make_shared<std::map<std::string, std::vector<std::string>>>(
      std::map<std::string, std::vector<std::string>>{{"s", {"a1"}},
                                                      {"r", {"a2"}},
                                                      {"o1", {"qbar", "b2"}},
                                                      {"o2", {"q", "b1"}}});
  spec.destination = [wires](const Message&, const std::string& origin) -> std::vector<std::string> {
    auto it = wires->find(origin);
    return it == wires->end() ? std::vector<std::string>{} : it->second;
  };

  Assembly assembly = assemble(h, "ff", parts, spec);

  AssembledNetwork net;
  net.automaton = std::move(assembly.automaton);
  net.composite = std::move(assembly.composite);
  net.medium = std::move(assembly.medium);
  net.part_ids = std::move(assembly.part_ids);
  net.medium_spec = spec;
  net.automaton.name = "flipflop";
  net.automaton.sig.alphabet["s"] = {bit_msg(Bit::O), bit_msg(Bit::L)};
  net.automaton.sig.alphabet["r"] = {bit_msg(Bit::O), bit_msg(Bit::L)};
  return net;
}

}  // namespace tpa
