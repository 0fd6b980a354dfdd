#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tpa/message.hpp"

namespace tpa {

using MsgSeq = std::vector<Message>;
using ChannelSet = std::set<std::string>;

/// One tick of communication: every declared channel maps to the (possibly
/// empty) finite message sequence observed on it during that tick. Channels
/// with no traffic are present with an explicit empty sequence; "no message
/// this tick" and "channel unknown" are different things.
class NamedSeq {
 public:
  NamedSeq() = default;

  /// All-empty named sequence over the given channels.
  static NamedSeq empty_on(const ChannelSet& channels);

  /// Declares `channel` (if needed) and sets its sequence.
  void set(const std::string& channel, MsgSeq msgs);
  void append(const std::string& channel, Message msg);

  bool has(const std::string& channel) const { return entries_.count(channel) != 0; }
  const MsgSeq& at(const std::string& channel) const;

  /// The channel's sequence, or empty when the channel is not in the domain.
  const MsgSeq& get_or_empty(const std::string& channel) const;

  ChannelSet domain() const;
  std::size_t domain_size() const { return entries_.size(); }
  bool all_empty() const;
  std::size_t total_messages() const;

  const std::map<std::string, MsgSeq>& entries() const { return entries_; }

  std::string to_string() const;

  friend bool operator==(const NamedSeq& a, const NamedSeq& b) { return a.entries_ == b.entries_; }
  friend bool operator!=(const NamedSeq& a, const NamedSeq& b) { return !(a == b); }
  friend bool operator<(const NamedSeq& a, const NamedSeq& b) { return a.entries_ < b.entries_; }

 private:
  std::map<std::string, MsgSeq> entries_;
};

/// Disjoint union of two named sequences. Throws OverlappingDomains when a
/// channel is owned by both sides, which signals a modeling bug.
NamedSeq sum(const NamedSeq& phi, const NamedSeq& psi);

/// Restriction of `theta` to `names`; channels outside the domain are ignored,
/// a disjoint `names` yields the empty named sequence.
NamedSeq project(const NamedSeq& theta, const ChannelSet& names);

/// A finite prefix of a named communication history: `horizon()` ticks, each a
/// NamedSeq over exactly `channels()`. Ticks are 1-indexed everywhere.
class TimedTrace {
 public:
  TimedTrace() = default;
  TimedTrace(ChannelSet channels, std::size_t horizon);

  const ChannelSet& channels() const { return channels_; }
  std::size_t horizon() const { return ticks_.size(); }

  const NamedSeq& tick(std::size_t n) const;

  /// Replaces tick `n`; the named sequence must cover exactly `channels()`.
  void set_tick(std::size_t n, NamedSeq seq);

  /// Appends one tick, extending the horizon.
  void push_tick(NamedSeq seq);

  std::string to_string() const;

  friend bool operator==(const TimedTrace& a, const TimedTrace& b) {
    return a.channels_ == b.channels_ && a.ticks_ == b.ticks_;
  }
  friend bool operator!=(const TimedTrace& a, const TimedTrace& b) { return !(a == b); }
  friend bool operator<(const TimedTrace& a, const TimedTrace& b) {
    if (a.channels_ != b.channels_) return a.channels_ < b.channels_;
    return a.ticks_ < b.ticks_;
  }

 private:
  void check_domain(const NamedSeq& seq) const;

  ChannelSet channels_;
  std::vector<NamedSeq> ticks_;
};

/// Pointwise lifts of sum and projection to traces.
TimedTrace sum_trace(const TimedTrace& alpha, const TimedTrace& beta);
TimedTrace project_trace(const TimedTrace& alpha, const ChannelSet& names);

/// First `j` ticks of `alpha`, channels preserved. 0 <= j <= horizon.
TimedTrace prefix(const TimedTrace& alpha, std::size_t j);

/// Order-preserving subsequence of the messages satisfying `keep`.
MsgSeq filter_msgs(const std::function<bool(const Message&)>& keep, const MsgSeq& s);

/// Trace text format, emitted and parsed bit-exactly. One line per
/// (tick, channel), ascending tick then lexicographic channel:
///   tick <n> <channel> : <m1> <m2> ...
/// with `-` standing for the empty sequence.
std::string format_trace(const TimedTrace& trace);
TimedTrace parse_trace(const std::string& text);

}  // namespace tpa
