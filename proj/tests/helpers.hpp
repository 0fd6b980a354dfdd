#pragma once

// Shared test fixtures and independent oracles. Everything here is written
// against the definitions directly, not against the library's execution path,
// so the suites can cross-check the implementation.

#include <deque>
#include <set>
#include <string>
#include <vector>

#include "tpa/builtins.hpp"
#include "tpa/compose.hpp"
#include "tpa/streams.hpp"

namespace tpatest {

using namespace tpa;

inline Message m(int v) { return int_msg(v); }

inline MsgSeq seq(std::initializer_list<int> xs) {
  MsgSeq out;
  for (int x : xs) out.push_back(int_msg(x));
  return out;
}

inline NamedSeq ns(std::initializer_list<std::pair<std::string, MsgSeq>> entries) {
  NamedSeq out;
  for (const auto& [c, s] : entries) out.set(c, s);
  return out;
}

inline TimedTrace trace_on(const ChannelSet& channels,
                           std::initializer_list<NamedSeq> ticks_partial) {
  TimedTrace t(channels, 0);
  for (const auto& tick : ticks_partial) {
    NamedSeq full = NamedSeq::empty_on(channels);
    for (const auto& [c, s] : tick.entries()) full.set(c, s);
    t.push_tick(full);
  }
  return t;
}

/// Single-channel input trace helper.
inline TimedTrace input1(const std::string& channel, std::initializer_list<MsgSeq> ticks) {
  TimedTrace t({channel}, 0);
  for (const auto& s : ticks) {
    NamedSeq tick;
    tick.set(channel, s);
    t.push_tick(tick);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Oracle: all merges of two sequences, via selector sequences p in {i,j}^n.
// pr_i(p, c) keeps the positions of c marked i; a candidate c is a merge of
// (a, b) iff some p reproduces both projections.
// ---------------------------------------------------------------------------

inline MsgSeq selector_projection(const std::vector<int>& p, const MsgSeq& c, int tag) {
  MsgSeq out;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] == tag) out.push_back(c[k]);
  return out;
}

inline std::set<std::string> merge_oracle(const MsgSeq& a, const MsgSeq& b) {
  std::set<std::string> out;
  std::size_t n = a.size() + b.size();
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    std::vector<int> p(n);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = (bits >> k) & 1;
      ones += p[k];
    }
    if (ones != a.size()) continue;
    // Build the unique c whose i-positions spell a and j-positions spell b.
    MsgSeq c(n);
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < n; ++k) c[k] = p[k] ? a[ia++] : b[ib++];
    if (selector_projection(p, c, 1) == a && selector_projection(p, c, 0) == b) {
      std::string key;
      for (const auto& msg : c) key += msg.render() + " ";
      out.insert(key);
    }
  }
  return out;
}

inline std::string render_seq(const MsgSeq& s) {
  std::string key;
  for (const auto& msg : s) key += msg.render() + " ";
  return key;
}

// ---------------------------------------------------------------------------
// Oracle: buffer output traces by direct recursion on the definition — emit a
// nonempty prefix whenever the buffer holds messages, append arrivals after.
// ---------------------------------------------------------------------------

inline void buffer_oracle_rec(const MsgSeq& buf, const TimedTrace& input, std::size_t tick,
                              std::vector<MsgSeq>& emitted, std::set<std::string>& out) {
  if (tick > input.horizon()) {
    std::string key;
    for (const auto& e : emitted) key += render_seq(e) + "|";
    out.insert(key);
    return;
  }
  const MsgSeq& fresh = input.tick(tick).at(*input.channels().begin());
  auto step = [&](std::size_t k) {
    MsgSeq head(buf.begin(), buf.begin() + k);
    MsgSeq rest(buf.begin() + k, buf.end());
    rest.insert(rest.end(), fresh.begin(), fresh.end());
    emitted.push_back(head);
    buffer_oracle_rec(rest, input, tick + 1, emitted, out);
    emitted.pop_back();
  };
  if (buf.empty()) {
    step(0);
    return;
  }
  for (std::size_t k = 1; k <= buf.size(); ++k) step(k);
}

inline std::set<std::string> buffer_oracle(const TimedTrace& input) {
  std::set<std::string> out;
  std::vector<MsgSeq> emitted;
  buffer_oracle_rec({}, input, 1, emitted, out);
  return out;
}

inline std::string render_output_column(const TimedTrace& t, const std::string& channel) {
  std::string key;
  for (std::size_t n = 1; n <= t.horizon(); ++n) key += render_seq(t.tick(n).at(channel)) + "|";
  return key;
}

// ---------------------------------------------------------------------------
// Oracle: nor-gate recurrence for the flip-flop.
//   qbar(n) = x1(n), q(n) = x2(n)
//   x1(n+1) = nor(s, x2(n)), x2(n+1) = nor(r, x1(n))
// ---------------------------------------------------------------------------

inline Bit nor_bit(Bit x, Bit y) { return (x == Bit::O && y == Bit::O) ? Bit::L : Bit::O; }

struct FlipflopColumn {
  std::vector<Bit> q;
  std::vector<Bit> qbar;
};

inline FlipflopColumn flipflop_oracle(Bit init1, Bit init2, Bit s, Bit r, std::size_t horizon) {
  FlipflopColumn out;
  Bit x1 = init1, x2 = init2;
  for (std::size_t n = 1; n <= horizon; ++n) {
    out.qbar.push_back(x1);
    out.q.push_back(x2);
    Bit nx1 = nor_bit(s, x2);
    Bit nx2 = nor_bit(r, x1);
    x1 = nx1;
    x2 = nx2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference FIFO queue for the end-to-end oracle.
// ---------------------------------------------------------------------------

struct ReferenceQueue {
  std::deque<std::string> items;
  void enq(const std::string& v) { items.push_back(v); }
  std::string deq() {
    std::string v = items.front();
    items.pop_front();
    return v;
  }
};

// ---------------------------------------------------------------------------
// Queue driver: feeds stimuli into the assembled queue, waits for the medium
// to drain between operations, follows the head id from deqd replies.
// ---------------------------------------------------------------------------

inline const Value* family_member_state(const Value& fam_state, const std::string& id) {
  for (const auto& e : fam_state.as_list()) {
    const auto& pair = e.as_list();
    if (pair[0].as_str() == id) return &pair[1];
  }
  return nullptr;
}

inline bool medium_drained(const Value& fam_state) {
  const Value* cm = family_member_state(fam_state, "_cm");
  if (!cm) return true;
  for (const auto& entry : cm->as_list()[0].as_list())
    if (!entry.as_list()[1].as_list().empty()) return false;
  return true;
}

inline std::size_t live_elements(const Value& fam_state) {
  std::size_t n = 0;
  for (const auto& e : fam_state.as_list())
    if (e.as_list()[0].as_str() != "_cm") ++n;
  return n;
}

class QueueDriver {
 public:
  explicit QueueDriver(std::size_t pool, QueueOptions opts = {0, 0, 0})
      : net_(queue_network(pool, opts)),
        stepper_(net_.automaton, ChoicePolicy::first_choice(), "queue-driver") {}

  const AssembledNetwork& net() const { return net_; }
  std::size_t now() const { return stepper_.next_tick(); }
  const std::vector<std::string>& deqd_values() const { return deqd_values_; }
  std::size_t max_live_seen() const { return max_live_; }
  std::size_t enqs_sent() const { return enqs_; }
  bool activity_bound_held() const { return activity_bound_held_; }

  /// One tick with the given external arrivals; harvests qu.o replies.
  void step(MsgSeq arrivals) {
    NamedSeq in = NamedSeq::empty_on(net_.automaton.sig.inputs);
    in.set("qu.i", std::move(arrivals));
    NamedSeq action = stepper_.step(in);
    for (const auto& m : action.at("qu.o")) {
      if (m.sort == "deqd") {
        auto [value, next] = parse_deqd(m);
        deqd_values_.push_back(value);
        head_ = next;
      }
    }
    max_live_ = std::max(max_live_, live_elements(stepper_.state()));
    if (live_elements(stepper_.state()) > enqs_ + 1) activity_bound_held_ = false;
  }

  void enq(const std::string& value) {
    step({enq_msg(value, "env", "q0")});
    ++enqs_;
  }
  void deq() { step({deq_msg("env", "env", head_)}); }

  /// Ticks silently until the medium holds nothing, or the cap is reached.
  bool drain(std::size_t max_ticks) {
    for (std::size_t k = 0; k < max_ticks; ++k) {
      if (medium_drained(stepper_.state())) return true;
      step({});
    }
    return medium_drained(stepper_.state());
  }

 private:
  AssembledNetwork net_;
  Stepper stepper_;
  std::string head_ = "q0";
  std::vector<std::string> deqd_values_;
  std::size_t enqs_ = 0;
  std::size_t max_live_ = 0;
  bool activity_bound_held_ = true;
};

}  // namespace tpatest
