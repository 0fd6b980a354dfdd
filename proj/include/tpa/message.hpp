#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tpa {

/// One message: an opaque payload with a sort tag, optionally annotated with
/// the sending and receiving port. Equality is structural.
struct Message {
  std::string sort;
  std::string payload;

  struct Meta {
    std::string sender;
    std::string receiver;
  };
  std::optional<Meta> meta;

  Message() = default;
  Message(std::string sort, std::string payload) : sort(std::move(sort)), payload(std::move(payload)) {}
  Message(std::string sort, std::string payload, std::string sender, std::string receiver)
      : sort(std::move(sort)), payload(std::move(payload)), meta(Meta{std::move(sender), std::move(receiver)}) {}

  /// `sort:payload` or `sort:payload@sender->receiver`. Components must be
  /// free of whitespace; sort additionally of ':' and payload of '@'.
  std::string render() const;
  static Message parse(const std::string& token);

  friend bool operator==(const Message& a, const Message& b) {
    bool ma = a.meta.has_value(), mb = b.meta.has_value();
    if (a.sort != b.sort || a.payload != b.payload || ma != mb) return false;
    return !ma || (a.meta->sender == b.meta->sender && a.meta->receiver == b.meta->receiver);
  }
  friend bool operator!=(const Message& a, const Message& b) { return !(a == b); }
  friend bool operator<(const Message& a, const Message& b);
};

/// Convenience for the common untagged integer test messages.
Message int_msg(std::int64_t v);

/// Structural values used for automaton states: unit, integer, string, message,
/// or a list of values. Deep equality, a total order, and a printable form make
/// them usable as set keys and in diagnostics.
class Value {
 public:
  using List = std::vector<Value>;

  Value() : v_(std::monostate{}) {}
  Value(std::int64_t n) : v_(n) {}
  Value(int n) : v_(static_cast<std::int64_t>(n)) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(Message m) : v_(std::move(m)) {}
  Value(List xs) : v_(std::move(xs)) {}

  bool is_unit() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_str() const { return std::holds_alternative<std::string>(v_); }
  bool is_msg() const { return std::holds_alternative<Message>(v_); }
  bool is_list() const { return std::holds_alternative<List>(v_); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  const std::string& as_str() const { return std::get<std::string>(v_); }
  const Message& as_msg() const { return std::get<Message>(v_); }
  const List& as_list() const { return std::get<List>(v_); }
  List& as_list() { return std::get<List>(v_); }

  std::string to_string() const;

  friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
  friend bool operator<(const Value& a, const Value& b);

 private:
  std::variant<std::monostate, std::int64_t, std::string, Message, List> v_;
};

}  // namespace tpa
