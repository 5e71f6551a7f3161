#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmelab/rng.hpp"
#include "rmelab/value.hpp"

namespace rmelab {

// Sequential specifications of the two wait objects, shared by the history
// checker below and the exhaustive object tests.
enum class LinObjKind : uint8_t { Capturable, Signal };

struct LinOpDesc {
  // 'r' read, 'w' write, 'c' capture, 'R' release, 'W' wait (capturable);
  // 's' set, 'z' reset, 'Y' wait (signal)
  char code = 'r';
  Pid pid = 0;
};

struct LinEvent {
  enum Kind : uint8_t { Invoke, Return, Crash } kind = Invoke;
  int op_id = 0;
  LinOpDesc op;
  std::optional<Value> result;  // on Return, for value-bearing ops
};

using LinHistory = std::vector<LinEvent>;

// Incremental strict-linearizability monitor: carries every abstract state
// still consistent with the events seen so far. An operation may take effect
// anywhere between its invocation and its return; one cut by a crash either
// took effect before the crash or never does. The history fails exactly when
// the feasible set empties.
class LinMonitor {
 public:
  LinMonitor(LinObjKind kind, Value init) : kind_(kind) {
    Config c;
    c.state = init;
    configs_.insert(c);
  }

  bool feasible() const { return !configs_.empty(); }

  void invoke(int op_id, LinOpDesc op) { pending_[op_id] = op; }

  void hash(Hash128& h) const {
    h.mix(configs_.size());
    for (const auto& c : configs_) {
      h.mix((static_cast<uint64_t>(c.state.kind) << 56) ^ c.state.payload);
      for (const auto& [id, r] : c.done) {
        h.mix(static_cast<uint64_t>(id) ^
              ((static_cast<uint64_t>(r.kind) << 56) ^ r.payload));
      }
    }
    h.mix(pending_.size());
    for (const auto& [id, op] : pending_) {
      h.mix(static_cast<uint64_t>(id) | (static_cast<uint64_t>(op.code) << 8) |
            (static_cast<uint64_t>(op.pid) << 16));
    }
  }

  // Filters to configurations in which the op linearized with this result.
  bool on_return(int op_id, const std::optional<Value>& result) {
    close_over_linearizations();
    std::set<Config> next;
    for (const auto& c : configs_) {
      auto it = c.done.find(op_id);
      if (it == c.done.end()) continue;
      if (result && !(it->second == *result)) continue;
      Config trimmed = c;
      trimmed.done.erase(op_id);
      next.insert(trimmed);
    }
    configs_ = std::move(next);
    pending_.erase(op_id);
    return feasible();
  }

  // Crash: pending ops that already linearized took effect; the rest never
  // will. Either disposition is allowed per configuration.
  void on_crash() {
    close_over_linearizations();
    std::set<Config> next;
    for (const auto& c : configs_) {
      Config collapsed;
      collapsed.state = c.state;
      next.insert(collapsed);
    }
    configs_ = std::move(next);
    pending_.clear();
  }

 private:
  struct Config {
    Value state;
    std::map<int, Value> done;  // pending ops already linearized → result

    bool operator<(const Config& o) const {
      if (state.kind != o.state.kind) return state.kind < o.state.kind;
      if (state.payload != o.state.payload) return state.payload < o.state.payload;
      return done < o.done;
    }
  };

  // One sequential step; waits are enabled only in the state they may
  // linearize in.
  bool apply(const LinOpDesc& op, Value state, Value* out_state, Value* out_result) const {
    *out_state = state;
    *out_result = Value::bot();
    switch (op.code) {
      case 'r':
        *out_result = state;
        return true;
      case 'w':
        *out_state = Value::pid(op.pid);
        return true;
      case 'c':
        if (state.is_bot()) {
          *out_state = Value::pid(op.pid);
          *out_result = Value::boolean(true);
        } else {
          *out_result = Value::boolean(false);
        }
        return true;
      case 'R':
        *out_state = Value::bot();
        return true;
      case 'W':
        return state.is_bot();
      case 's':
        *out_state = Value::boolean(true);
        return true;
      case 'z':
        *out_state = Value::boolean(false);
        return true;
      case 'Y':
        return state == Value::boolean(true);
    }
    return false;
  }

  // Expands every configuration with all orders of linearizing the ops still
  // pending. Pending counts are tiny (one per process).
  void close_over_linearizations() {
    std::set<Config> closed = configs_;
    std::vector<Config> frontier(configs_.begin(), configs_.end());
    while (!frontier.empty()) {
      Config c = frontier.back();
      frontier.pop_back();
      for (const auto& [id, op] : pending_) {
        if (c.done.count(id)) continue;
        Value ns, res;
        if (!apply(op, c.state, &ns, &res)) continue;
        Config nc = c;
        nc.state = ns;
        nc.done[id] = res;
        if (closed.insert(nc).second) frontier.push_back(nc);
      }
    }
    configs_ = std::move(closed);
  }

  LinObjKind kind_;
  std::set<Config> configs_;
  std::map<int, LinOpDesc> pending_;
};

// History-level entry point: searches for a legal sequential ordering that
// respects real-time order and strict crash semantics. Histories beyond the
// size guard are rejected (the search is exponential in pending ops).
inline bool seq_check_wait_objects(LinObjKind kind, Value init,
                                   const LinHistory& history,
                                   std::string* error = nullptr) {
  size_t ops = 0;
  for (const auto& ev : history) {
    if (ev.kind == LinEvent::Invoke) ops++;
  }
  if (ops > 16) {
    if (error) *error = "history too large";
    return false;
  }
  LinMonitor mon(kind, init);
  for (const auto& ev : history) {
    switch (ev.kind) {
      case LinEvent::Invoke:
        mon.invoke(ev.op_id, ev.op);
        break;
      case LinEvent::Return:
        if (!mon.on_return(ev.op_id, ev.result)) return false;
        break;
      case LinEvent::Crash:
        mon.on_crash();
        break;
    }
  }
  return mon.feasible();
}

}  // namespace rmelab
