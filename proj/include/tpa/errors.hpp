#pragma once

#include <stdexcept>
#include <string>

namespace tpa {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// sum() over named sequences or traces whose domains share a channel.
struct OverlappingDomains : Error {
  explicit OverlappingDomains(const std::string& channel)
      : Error("overlapping domains: channel '" + channel + "' present on both sides"),
        channel(channel) {}
  std::string channel;
};

/// Trace operations that require equal horizons.
struct HorizonMismatch : Error {
  HorizonMismatch(std::size_t lhs, std::size_t rhs)
      : Error("horizon mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

struct OutOfRange : Error {
  using Error::Error;
};

/// A named sequence or trace fed to an evaluator with the wrong channel set.
struct ChannelMismatch : Error {
  using Error::Error;
};

struct IncompatibleSignatures : Error {
  explicit IncompatibleSignatures(const std::string& channel)
      : Error("incompatible signatures: channel '" + channel + "'"), channel(channel) {}
  std::string channel;
};

/// A feedback loop no verified moore declaration breaks; composition is refused.
struct PotentialBlocking : Error {
  explicit PotentialBlocking(const std::string& what) : Error("potential blocking: " + what) {}
};

struct NotAnOutput : Error {
  explicit NotAnOutput(const std::string& channel)
      : Error("not an output channel: '" + channel + "'"), channel(channel) {}
  std::string channel;
};

/// The transition generator produced no transition for (state, input) at a tick.
struct Stuck : Error {
  Stuck(std::string state, std::string input, std::size_t tick)
      : Error("stuck at tick " + std::to_string(tick) + " in state " + state + " on input " +
              input),
        state(std::move(state)),
        input(std::move(input)),
        tick(tick) {}
  std::string state;
  std::string input;
  std::size_t tick;
};

/// A tick would activate more members than the configured bound allows.
struct InfiniteActivity : Error {
  using Error::Error;
};

struct OriginMismatch : Error {
  OriginMismatch(const std::string& message, const std::string& channel)
      : Error("message " + message + " arrived on '" + channel + "' but maps to another origin") {}
};

/// A message with no destination under the no-loss policy.
struct LostMessage : Error {
  explicit LostMessage(const std::string& message) : Error("message would be lost: " + message) {}
};

struct SignatureMismatch : Error {
  using Error::Error;
};

struct ChannelClash : Error {
  explicit ChannelClash(const std::string& channel)
      : Error("channel clash: '" + channel + "'"), channel(channel) {}
  std::string channel;
};

struct ParseError : Error {
  ParseError(std::size_t line, const std::string& reason)
      : Error("parse error at line " + std::to_string(line) + ": " + reason),
        line(line),
        reason(reason) {}
  std::size_t line;
  std::string reason;
};

}  // namespace tpa
