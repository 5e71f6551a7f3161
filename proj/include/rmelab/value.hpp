#pragma once

#include <cassert>
#include <cstdint>
#include <string>

namespace rmelab {

using Pid = uint32_t;
using CellId = uint32_t;

inline constexpr CellId kNoCell = 0xffffffffu;
inline constexpr Pid kNoPid = 0xffffffffu;

// One tagged shared-memory word. Bot is the empty/null marker, Token the
// hand-off sentinel of the DSM queue lock; the three are pairwise distinct
// and never compare equal to a Ref.
enum class ValueKind : uint8_t { Bot, Token, Nat, Pid, Bool, Ref };

struct Value {
  ValueKind kind = ValueKind::Bot;
  uint64_t payload = 0;

  static constexpr Value bot() { return {ValueKind::Bot, 0}; }
  static constexpr Value token() { return {ValueKind::Token, 0}; }
  static constexpr Value nat(uint64_t v) { return {ValueKind::Nat, v}; }
  static constexpr Value pid(Pid p) { return {ValueKind::Pid, p}; }
  static constexpr Value boolean(bool b) {
    return {ValueKind::Bool, b ? 1ull : 0ull};
  }
  static constexpr Value ref(CellId c) { return {ValueKind::Ref, c}; }

  // (seq, flag) pairs are packed into one Nat so that every access to a go
  // cell stays a single atomic word operation.
  static constexpr Value go_pair(uint64_t seq, bool flag) {
    return nat((seq << 1) | (flag ? 1 : 0));
  }

  bool is_bot() const { return kind == ValueKind::Bot; }
  bool is_token() const { return kind == ValueKind::Token; }
  bool is_nat() const { return kind == ValueKind::Nat; }
  bool is_pid() const { return kind == ValueKind::Pid; }
  bool is_bool() const { return kind == ValueKind::Bool; }
  bool is_ref() const { return kind == ValueKind::Ref; }

  uint64_t as_nat() const {
    assert(is_nat());
    return payload;
  }
  Pid as_pid() const {
    assert(is_pid());
    return static_cast<Pid>(payload);
  }
  bool as_bool() const {
    assert(is_bool());
    return payload != 0;
  }
  CellId as_ref() const {
    assert(is_ref());
    return static_cast<CellId>(payload);
  }

  uint64_t go_seq() const { return as_nat() >> 1; }
  bool go_flag() const { return (as_nat() & 1) != 0; }

  friend bool operator==(const Value& a, const Value& b) {
    return a.kind == b.kind && a.payload == b.payload;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
  friend bool operator<(const Value& a, const Value& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.payload < b.payload;
  }

  std::string str() const {
    switch (kind) {
      case ValueKind::Bot:
        return "bot";
      case ValueKind::Token:
        return "token";
      case ValueKind::Nat:
        return "nat:" + std::to_string(payload);
      case ValueKind::Pid:
        return "pid:" + std::to_string(payload);
      case ValueKind::Bool:
        return payload ? "true" : "false";
      case ValueKind::Ref:
        return "ref:" + std::to_string(payload);
    }
    return "?";
  }

  static bool parse(const std::string& s, Value* out) {
    if (s == "bot") {
      *out = bot();
      return true;
    }
    if (s == "token") {
      *out = token();
      return true;
    }
    if (s == "true") {
      *out = boolean(true);
      return true;
    }
    if (s == "false") {
      *out = boolean(false);
      return true;
    }
    auto num = [](const std::string& t, uint64_t* v) {
      if (t.empty()) return false;
      *v = 0;
      for (char c : t) {
        if (c < '0' || c > '9') return false;
        *v = *v * 10 + static_cast<uint64_t>(c - '0');
      }
      return true;
    };
    uint64_t v = 0;
    if (s.rfind("nat:", 0) == 0 && num(s.substr(4), &v)) {
      *out = nat(v);
      return true;
    }
    if (s.rfind("pid:", 0) == 0 && num(s.substr(4), &v)) {
      *out = pid(static_cast<Pid>(v));
      return true;
    }
    if (s.rfind("ref:", 0) == 0 && num(s.substr(4), &v)) {
      *out = ref(static_cast<CellId>(v));
      return true;
    }
    return false;
  }
};

}  // namespace rmelab
