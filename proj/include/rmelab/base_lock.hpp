#pragma once

#include <cassert>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmelab/memory.hpp"
#include "rmelab/rng.hpp"
#include "rmelab/value.hpp"

namespace rmelab {

enum class LockFlavor : uint8_t { CC, DSM };

enum class BlMethod : uint8_t { None, Try, Exit, Reset, Abandon };

enum class StepOutcome : uint8_t { InProgress, Done };

inline const char* to_string(BlMethod m) {
  switch (m) {
    case BlMethod::None: return "none";
    case BlMethod::Try: return "try";
    case BlMethod::Exit: return "exit";
    case BlMethod::Reset: return "reset";
    case BlMethod::Abandon: return "abandon";
  }
  return "?";
}

// Abstract lock membership, maintained here and read by the checkers. A
// system crash folds the three live sets into crash_set; reset empties all
// four.
struct GhostSets {
  std::set<Pid> try_set, cs_set, exit_set, crash_set;

  bool in_any_live(Pid p) const {
    return try_set.count(p) || cs_set.count(p) || exit_set.count(p);
  }
  bool in_any(Pid p) const { return in_any_live(p) || crash_set.count(p); }
  bool live_empty() const {
    return try_set.empty() && cs_set.empty() && exit_set.empty();
  }
  bool all_empty() const { return live_empty() && crash_set.empty(); }

  void hash(Hash128& h) const {
    auto mix_set = [&h](const std::set<Pid>& s) {
      h.mix(s.size());
      for (Pid p : s) h.mix(p);
    };
    mix_set(try_set);
    mix_set(cs_set);
    mix_set(exit_set);
    mix_set(crash_set);
  }
};

// The access a sub-step performed, handed back so the engine can trace it.
struct AccessInfo {
  bool happened = false;
  CellId cell = kNoCell;
  MemOpKind op = MemOpKind::Read;
  Value after;
  bool rmr_cc = false;
  bool rmr_dsm = false;
};

// Resettable two-node queue lock, one instance per rotation slot. The CC
// flavor parks waiters on the predecessor's node; the DSM flavor hands each
// waiter a locally-spinnable go cell and moves a token through the nodes.
// Exit doubles as Abandon: crashed or migrating processes run the exit code
// outside the use pattern, which is what the release property needs.
class BaseLock {
 public:
  BaseLock() = default;
  BaseLock(LockFlavor flavor, std::string name) : flavor_(flavor), name_(std::move(name)) {}

  void init_shared(Memory& mem) {
    tail_ = mem.alloc_cell(true, kNoPid, Value::bot(), name_ + ".Tail");
  }

  LockFlavor flavor() const { return flavor_; }
  const GhostSets& ghost() const { return ghost_; }
  CellId tail_cell() const { return tail_; }

  bool registered(Pid p) const {
    return p < procs_.size() && procs_[p].node[0] != kNoCell;
  }

  void register_proc(Memory& mem, Pid p) {
    if (p >= procs_.size()) procs_.resize(p + 1);
    BlProc& pr = procs_[p];
    if (pr.node[0] != kNoCell) return;
    Value node_init = flavor_ == LockFlavor::CC ? Value::boolean(false) : Value::bot();
    for (int f = 0; f < 2; ++f) {
      pr.node[f] = mem.alloc_cell(true, kNoPid, node_init,
                                  name_ + ".node[p" + std::to_string(p) + "][" +
                                      std::to_string(f) + "]");
    }
    if (flavor_ == LockFlavor::DSM) {
      pr.go = mem.alloc_cell(true, p, Value::boolean(false),
                             name_ + ".go[p" + std::to_string(p) + "]");
    }
  }

  bool method_armed(Pid p) const {
    return p < procs_.size() && procs_[p].method != BlMethod::None;
  }
  BlMethod armed_method(Pid p) const {
    return p < procs_.size() ? procs_[p].method : BlMethod::None;
  }

  // Arms the method and applies the ghost transition. Returns a detail string
  // when the use pattern was broken; the caller reports it and the run goes
  // on, since misuse is itself a property under test. Abandon is exempt.
  std::optional<std::string> invoke(Memory& mem, Pid p, BlMethod m) {
    register_proc(mem, p);
    BlProc& pr = procs_[p];
    assert(pr.method == BlMethod::None);
    std::optional<std::string> violation;
    switch (m) {
      case BlMethod::Try:
        if (ghost_.in_any(p)) {
          violation = name_ + ": try invoked by p" + std::to_string(p) +
                      " already in a ghost set";
        }
        ghost_.try_set.insert(p);
        pr.face ^= 1;  // line 1 of try, a persistent-local transition
        break;
      case BlMethod::Exit:
        if (!ghost_.cs_set.count(p)) {
          violation = name_ + ": exit invoked by p" + std::to_string(p) +
                      " not in cs_set";
        }
        ghost_.cs_set.erase(p);
        ghost_.exit_set.insert(p);
        break;
      case BlMethod::Reset:
        if (!ghost_.live_empty()) {
          violation = name_ + ": reset invoked with nonempty live sets";
        }
        break;
      case BlMethod::Abandon:
        ghost_.try_set.erase(p);
        ghost_.cs_set.erase(p);
        ghost_.exit_set.insert(p);
        break;
      case BlMethod::None:
        assert(false);
    }
    pr.method = m;
    pr.sub = 0;
    return violation;
  }

  // One shared access (or pure-local transition) of the armed method.
  StepOutcome step(Memory& mem, Pid p, AccessInfo* info) {
    BlProc& pr = procs_[p];
    assert(pr.method != BlMethod::None);
    switch (pr.method) {
      case BlMethod::Try:
        return flavor_ == LockFlavor::CC ? step_try_cc(mem, p, pr, info)
                                         : step_try_dsm(mem, p, pr, info);
      case BlMethod::Exit:
      case BlMethod::Abandon:
        return flavor_ == LockFlavor::CC ? step_exit_cc(mem, p, pr, info)
                                         : step_exit_dsm(mem, p, pr, info);
      case BlMethod::Reset: {
        do_access(mem, p, tail_, MemOp::write(Value::bot()), info);
        ghost_ = GhostSets{};
        pr.method = BlMethod::None;
        return StepOutcome::Done;
      }
      case BlMethod::None:
        break;
    }
    assert(false);
    return StepOutcome::Done;
  }

  // Drops an in-flight method without touching the ghost sets (the CC
  // machine's stop arm can fire mid-try; the membership stays behind until
  // the lock is reset).
  void abort_method(Pid p) {
    if (p < procs_.size()) {
      procs_[p].method = BlMethod::None;
      procs_[p].sub = 0;
    }
  }

  void on_system_crash(Rng* rng) {
    for (Pid p : ghost_.try_set) ghost_.crash_set.insert(p);
    for (Pid p : ghost_.cs_set) ghost_.crash_set.insert(p);
    for (Pid p : ghost_.exit_set) ghost_.crash_set.insert(p);
    ghost_.try_set.clear();
    ghost_.cs_set.clear();
    ghost_.exit_set.clear();
    for (auto& pr : procs_) {
      pr.method = BlMethod::None;
      pr.sub = 0;
      pr.prev = rng ? Value::nat(rng->next()) : Value::bot();
    }
  }

  void hash(Hash128& h) const {
    ghost_.hash(h);
    for (const auto& pr : procs_) {
      h.mix(static_cast<uint64_t>(pr.face) | (static_cast<uint64_t>(pr.method) << 8) |
            (static_cast<uint64_t>(pr.sub) << 16));
      if (pr.method != BlMethod::None) {
        h.mix((static_cast<uint64_t>(pr.prev.kind) << 56) ^ pr.prev.payload);
      }
    }
  }

  const std::string& name() const { return name_; }

 private:
  struct BlProc {
    CellId node[2] = {kNoCell, kNoCell};
    CellId go = kNoCell;
    uint8_t face = 0;      // persistent local
    BlMethod method = BlMethod::None;
    uint8_t sub = 0;
    Value prev;            // volatile register
  };

  Value do_access(Memory& mem, Pid p, CellId cell, const MemOp& op,
                  AccessInfo* info) {
    AccessResult r = mem.access(p, cell, op);
    if (info) {
      info->happened = true;
      info->cell = cell;
      info->op = op.kind;
      info->after = r.after;
      info->rmr_cc = r.rmr_cc;
      info->rmr_dsm = r.rmr_dsm;
    }
    return r.result;
  }

  StepOutcome step_try_cc(Memory& mem, Pid p, BlProc& pr, AccessInfo* info) {
    switch (pr.sub) {
      case 0:
        do_access(mem, p, pr.node[pr.face], MemOp::write(Value::boolean(false)), info);
        pr.sub = 1;
        return StepOutcome::InProgress;
      case 1:
        pr.prev = do_access(mem, p, tail_, MemOp::fas(Value::ref(pr.node[pr.face])), info);
        if (pr.prev.is_bot()) return finish_try(p, pr);
        pr.sub = 2;
        return StepOutcome::InProgress;
      default: {
        Value v = do_access(mem, p, pr.prev.as_ref(), MemOp::read(), info);
        if (v == Value::boolean(true)) return finish_try(p, pr);
        return StepOutcome::InProgress;
      }
    }
  }

  StepOutcome step_try_dsm(Memory& mem, Pid p, BlProc& pr, AccessInfo* info) {
    switch (pr.sub) {
      case 0:
        do_access(mem, p, pr.node[pr.face], MemOp::write(Value::bot()), info);
        pr.sub = 1;
        return StepOutcome::InProgress;
      case 1:
        pr.prev = do_access(mem, p, tail_, MemOp::fas(Value::ref(pr.node[pr.face])), info);
        if (pr.prev.is_bot()) return finish_try(p, pr);
        pr.sub = 2;
        return StepOutcome::InProgress;
      case 2:
        do_access(mem, p, pr.go, MemOp::write(Value::boolean(false)), info);
        pr.sub = 3;
        return StepOutcome::InProgress;
      case 3: {
        Value r = do_access(mem, p, pr.prev.as_ref(), MemOp::fas(Value::ref(pr.go)), info);
        if (r.is_token()) return finish_try(p, pr);
        pr.sub = 4;
        return StepOutcome::InProgress;
      }
      default: {
        Value v = do_access(mem, p, pr.go, MemOp::read(), info);
        if (v == Value::boolean(true)) return finish_try(p, pr);
        return StepOutcome::InProgress;
      }
    }
  }

  StepOutcome step_exit_cc(Memory& mem, Pid p, BlProc& pr, AccessInfo* info) {
    do_access(mem, p, pr.node[pr.face], MemOp::write(Value::boolean(true)), info);
    return finish_exit(p, pr);
  }

  StepOutcome step_exit_dsm(Memory& mem, Pid p, BlProc& pr, AccessInfo* info) {
    switch (pr.sub) {
      case 0: {
        Value r = do_access(mem, p, pr.node[pr.face], MemOp::fas(Value::token()), info);
        // Abandon can find the node already holding the token (a previous
        // exit of the same node with no successor); only a Ref is followed.
        if (!r.is_ref()) return finish_exit(p, pr);
        pr.prev = r;
        pr.sub = 1;
        return StepOutcome::InProgress;
      }
      default:
        do_access(mem, p, pr.prev.as_ref(), MemOp::write(Value::boolean(true)), info);
        return finish_exit(p, pr);
    }
  }

  StepOutcome finish_try(Pid p, BlProc& pr) {
    ghost_.try_set.erase(p);
    ghost_.cs_set.insert(p);
    pr.method = BlMethod::None;
    pr.sub = 0;
    return StepOutcome::Done;
  }

  StepOutcome finish_exit(Pid p, BlProc& pr) {
    ghost_.exit_set.erase(p);
    if (pr.method == BlMethod::Abandon) ghost_.crash_set.erase(p);
    pr.method = BlMethod::None;
    pr.sub = 0;
    return StepOutcome::Done;
  }

  LockFlavor flavor_ = LockFlavor::CC;
  std::string name_;
  CellId tail_ = kNoCell;
  GhostSets ghost_;
  std::vector<BlProc> procs_;
};

}  // namespace rmelab
