#include "tpa/streams.hpp"

#include <sstream>

#include "tpa/errors.hpp"

namespace tpa {

NamedSeq NamedSeq::empty_on(const ChannelSet& channels) {
  NamedSeq out;
  for (const auto& c : channels) out.entries_[c] = {};
  return out;
}

void NamedSeq::set(const std::string& channel, MsgSeq msgs) { entries_[channel] = std::move(msgs); }

void NamedSeq::append(const std::string& channel, Message msg) {
  entries_[channel].push_back(std::move(msg));
}

const MsgSeq& NamedSeq::at(const std::string& channel) const {
  auto it = entries_.find(channel);
  if (it == entries_.end()) throw ChannelMismatch("channel '" + channel + "' not in domain");
  return it->second;
}

const MsgSeq& NamedSeq::get_or_empty(const std::string& channel) const {
  static const MsgSeq kEmpty;
  auto it = entries_.find(channel);
  return it == entries_.end() ? kEmpty : it->second;
}

ChannelSet NamedSeq::domain() const {
  ChannelSet out;
  for (const auto& [c, _] : entries_) out.insert(c);
  return out;
}

bool NamedSeq::all_empty() const {
  for (const auto& [_, s] : entries_)
    if (!s.empty()) return false;
  return true;
}

std::size_t NamedSeq::total_messages() const {
  std::size_t n = 0;
  for (const auto& [_, s] : entries_) n += s.size();
  return n;
}

std::string NamedSeq::to_string() const {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [c, s] : entries_) {
    if (!first) out << " ";
    first = false;
    out << c << ":";
    if (s.empty()) {
      out << "-";
    } else {
      for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "," : "") << s[i].render();
    }
  }
  out << "}";
  return out.str();
}

NamedSeq sum(const NamedSeq& phi, const NamedSeq& psi) {
  NamedSeq out = phi;
  for (const auto& [c, s] : psi.entries()) {
    if (out.has(c)) throw OverlappingDomains(c);
    out.set(c, s);
  }
  return out;
}

NamedSeq project(const NamedSeq& theta, const ChannelSet& names) {
  NamedSeq out;
  for (const auto& [c, s] : theta.entries())
    if (names.count(c)) out.set(c, s);
  return out;
}

TimedTrace::TimedTrace(ChannelSet channels, std::size_t horizon) : channels_(std::move(channels)) {
  ticks_.assign(horizon, NamedSeq::empty_on(channels_));
}

const NamedSeq& TimedTrace::tick(std::size_t n) const {
  if (n < 1 || n > ticks_.size())
    throw OutOfRange("tick " + std::to_string(n) + " outside 1.." + std::to_string(ticks_.size()));
  return ticks_[n - 1];
}

void TimedTrace::check_domain(const NamedSeq& seq) const {
  if (seq.domain() != channels_)
    throw ChannelMismatch("tick domain " + seq.to_string() + " does not match trace channels");
}

void TimedTrace::set_tick(std::size_t n, NamedSeq seq) {
  if (n < 1 || n > ticks_.size())
    throw OutOfRange("tick " + std::to_string(n) + " outside 1.." + std::to_string(ticks_.size()));
  check_domain(seq);
  ticks_[n - 1] = std::move(seq);
}

void TimedTrace::push_tick(NamedSeq seq) {
  check_domain(seq);
  ticks_.push_back(std::move(seq));
}

std::string TimedTrace::to_string() const { return format_trace(*this); }

TimedTrace sum_trace(const TimedTrace& alpha, const TimedTrace& beta) {
  if (alpha.horizon() != beta.horizon()) throw HorizonMismatch(alpha.horizon(), beta.horizon());
  for (const auto& c : alpha.channels())
    if (beta.channels().count(c)) throw OverlappingDomains(c);
  ChannelSet channels = alpha.channels();
  channels.insert(beta.channels().begin(), beta.channels().end());
  TimedTrace out(channels, alpha.horizon());
  for (std::size_t n = 1; n <= alpha.horizon(); ++n) out.set_tick(n, sum(alpha.tick(n), beta.tick(n)));
  return out;
}

TimedTrace project_trace(const TimedTrace& alpha, const ChannelSet& names) {
  ChannelSet channels;
  for (const auto& c : alpha.channels())
    if (names.count(c)) channels.insert(c);
  TimedTrace out(channels, alpha.horizon());
  for (std::size_t n = 1; n <= alpha.horizon(); ++n) out.set_tick(n, project(alpha.tick(n), channels));
  return out;
}

TimedTrace prefix(const TimedTrace& alpha, std::size_t j) {
  if (j > alpha.horizon())
    throw OutOfRange("prefix length " + std::to_string(j) + " exceeds horizon " +
                     std::to_string(alpha.horizon()));
  TimedTrace out(alpha.channels(), j);
  for (std::size_t n = 1; n <= j; ++n) out.set_tick(n, alpha.tick(n));
  return out;
}

MsgSeq filter_msgs(const std::function<bool(const Message&)>& keep, const MsgSeq& s) {
  MsgSeq out;
  for (const auto& m : s)
    if (keep(m)) out.push_back(m);
  return out;
}

std::string format_trace(const TimedTrace& trace) {
  std::ostringstream out;
  for (std::size_t n = 1; n <= trace.horizon(); ++n) {
    for (const auto& [c, s] : trace.tick(n).entries()) {
      out << "tick " << n << " " << c << " :";
      if (s.empty()) {
        out << " -";
      } else {
        for (const auto& m : s) out << " " << m.render();
      }
      out << "\n";
    }
  }
  return out.str();
}

TimedTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  // (tick, channel) -> sequence, collected first so the channel set is known.
  std::map<std::size_t, std::map<std::string, MsgSeq>> ticks;
  ChannelSet channels;
  std::size_t max_tick = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kw, channel, colon;
    std::size_t n = 0;
    if (!(ls >> kw >> n >> channel >> colon) || kw != "tick" || colon != ":" || n == 0)
      throw ParseError(lineno, "expected 'tick <n> <channel> : ...'");
    MsgSeq seq;
    std::string token;
    bool dash = false;
    while (ls >> token) {
      if (token == "-") {
        dash = true;
        break;
      }
      seq.push_back(Message::parse(token));
    }
    if (dash && !seq.empty()) throw ParseError(lineno, "'-' mixed with messages");
    if (ticks[n].count(channel)) throw ParseError(lineno, "duplicate (tick, channel) line");
    ticks[n][channel] = std::move(seq);
    channels.insert(channel);
    max_tick = std::max(max_tick, n);
  }
  TimedTrace out(channels, max_tick);
  for (std::size_t n = 1; n <= max_tick; ++n) {
    auto it = ticks.find(n);
    NamedSeq seq = NamedSeq::empty_on(channels);
    if (it != ticks.end()) {
      if (it->second.size() != channels.size())
        throw ParseError(0, "tick " + std::to_string(n) + " does not cover every channel");
      for (auto& [c, s] : it->second) seq.set(c, std::move(s));
    } else if (!channels.empty()) {
      throw ParseError(0, "tick " + std::to_string(n) + " missing entirely");
    }
    out.set_tick(n, std::move(seq));
  }
  return out;
}

}  // namespace tpa
