#include "tpa/message.hpp"

#include <sstream>

#include "tpa/errors.hpp"

namespace tpa {

namespace {

void check_component(const std::string& s, const char* what, bool allow_colon, bool allow_at) {
  for (char c : s) {
    bool bad = c == ' ' || c == '\t' || c == '\n' || (!allow_colon && c == ':') || (!allow_at && c == '@');
    if (bad) throw Error(std::string("message ") + what + " contains a reserved character: '" + s + "'");
  }
}

}  // namespace

std::string Message::render() const {
  check_component(sort, "sort", false, false);
  check_component(payload, "payload", true, false);
  std::string out = sort + ":" + payload;
  if (meta) {
    check_component(meta->sender, "sender", false, false);
    check_component(meta->receiver, "receiver", false, false);
    out += "@" + meta->sender + "->" + meta->receiver;
  }
  return out;
}

Message Message::parse(const std::string& token) {
  auto colon = token.find(':');
  if (colon == std::string::npos || colon == 0) throw Error("malformed message token: '" + token + "'");
  Message m;
  m.sort = token.substr(0, colon);
  std::string rest = token.substr(colon + 1);
  auto at = rest.find('@');
  if (at == std::string::npos) {
    m.payload = rest;
  } else {
    m.payload = rest.substr(0, at);
    std::string annot = rest.substr(at + 1);
    auto arrow = annot.find("->");
    if (arrow == std::string::npos) throw Error("malformed message meta: '" + token + "'");
    m.meta = Meta{annot.substr(0, arrow), annot.substr(arrow + 2)};
  }
  return m;
}

bool operator<(const Message& a, const Message& b) {
  if (a.sort != b.sort) return a.sort < b.sort;
  if (a.payload != b.payload) return a.payload < b.payload;
  bool ma = a.meta.has_value(), mb = b.meta.has_value();
  if (ma != mb) return mb;
  if (!ma) return false;
  if (a.meta->sender != b.meta->sender) return a.meta->sender < b.meta->sender;
  return a.meta->receiver < b.meta->receiver;
}

Message int_msg(std::int64_t v) { return Message("int", std::to_string(v)); }

std::string Value::to_string() const {
  struct Visitor {
    std::string operator()(std::monostate) const { return "()"; }
    std::string operator()(std::int64_t n) const { return std::to_string(n); }
    std::string operator()(const std::string& s) const { return "'" + s + "'"; }
    std::string operator()(const Message& m) const { return "<" + m.render() + ">"; }
    std::string operator()(const List& xs) const {
      std::ostringstream out;
      out << "[";
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << " ";
        out << xs[i].to_string();
      }
      out << "]";
      return out.str();
    }
  };
  return std::visit(Visitor{}, v_);
}

bool operator<(const Value& a, const Value& b) {
  if (a.v_.index() != b.v_.index()) return a.v_.index() < b.v_.index();
  switch (a.v_.index()) {
    case 0:
      return false;
    case 1:
      return a.as_int() < b.as_int();
    case 2:
      return a.as_str() < b.as_str();
    case 3:
      return a.as_msg() < b.as_msg();
    default: {
      const auto& xs = a.as_list();
      const auto& ys = b.as_list();
      for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (xs[i] < ys[i]) return true;
        if (ys[i] < xs[i]) return false;
      }
      return xs.size() < ys.size();
    }
  }
}

}  // namespace tpa
