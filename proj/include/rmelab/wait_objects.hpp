#pragma once

#include <cassert>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmelab/base_lock.hpp"  // AccessInfo
#include "rmelab/memory.hpp"
#include "rmelab/value.hpp"

namespace rmelab {

enum class CapMethod : uint8_t { None, Read, Write, Capture, Release, Wait };
enum class SigMethod : uint8_t { None, Set, Reset, Wait };

struct MethodStatus {
  StepOutcome outcome = StepOutcome::InProgress;
  Value result;  // Read: state; Capture: Bool
};

// Capturable ownership word with slot-indexed local-spin waiting. The wait
// registration carries a sequence number so a release delayed past a capture
// can only flip the exact registration it examined; stale registrations are
// harmless by the release-time re-check of x.
class Capturable {
 public:
  Capturable() = default;
  explicit Capturable(std::string name) : name_(std::move(name)) {}

  void init_shared(Memory& mem) {
    x_ = mem.alloc_cell(true, kNoPid, Value::bot(), name_ + ".x");
    for (int i = 0; i < 3; ++i) {
      w_[i] = mem.alloc_cell(true, kNoPid, Value::bot(),
                             name_ + ".w[" + std::to_string(i) + "]");
    }
    abstract_ = Value::bot();
  }

  void register_proc(Memory& mem, Pid p) {
    if (p >= procs_.size()) procs_.resize(p + 1);
    if (procs_[p].go == kNoCell) {
      procs_[p].go = mem.alloc_cell(true, p, Value::go_pair(0, false),
                                    name_ + ".go[p" + std::to_string(p) + "]");
    }
  }

  // Abstract state per the sequential spec; mirrors x after every step.
  const Value& state() const { return abstract_; }
  CellId x_cell() const { return x_; }
  const std::string& name() const { return name_; }

  bool method_armed(Pid p) const {
    return p < procs_.size() && procs_[p].method != CapMethod::None;
  }

  // A release takes effect at its first sub-step; the rest of the method is
  // the waiter sweep. Checkers need to know which side of that point a
  // process at the release line stands on.
  bool release_linearized(Pid p) const {
    return p < procs_.size() && procs_[p].method == CapMethod::Release &&
           procs_[p].sub > 0;
  }

  std::optional<std::string> invoke(Memory& mem, Pid p, CapMethod m, int slot = 0) {
    register_proc(mem, p);
    Proc& pr = procs_[p];
    assert(pr.method == CapMethod::None);
    pr.method = m;
    pr.sub = 0;
    pr.slot = static_cast<uint8_t>(slot);
    if (m == CapMethod::Wait) {
      assert(slot >= 0 && slot < 3);
      if (!waiters_[slot].empty()) {
        waiters_[slot].insert(p);
        return name_ + ": two waiters on slot " + std::to_string(slot);
      }
      waiters_[slot].insert(p);
    }
    return std::nullopt;
  }

  MethodStatus step(Memory& mem, Pid p, AccessInfo* info) {
    Proc& pr = procs_[p];
    MethodStatus st;
    switch (pr.method) {
      case CapMethod::Read: {
        st.result = do_access(mem, p, x_, MemOp::read(), info);
        return finish(pr, st);
      }
      case CapMethod::Write: {
        do_access(mem, p, x_, MemOp::write(Value::pid(p)), info);
        abstract_ = Value::pid(p);
        return finish(pr, st);
      }
      case CapMethod::Capture: {
        st.result = do_access(mem, p, x_, MemOp::cas(Value::bot(), Value::pid(p)), info);
        if (st.result.as_bool()) abstract_ = Value::pid(p);
        return finish(pr, st);
      }
      case CapMethod::Release:
        return step_release(mem, p, pr, info);
      case CapMethod::Wait:
        return step_wait(mem, p, pr, info);
      case CapMethod::None:
        break;
    }
    assert(false);
    return st;
  }

  // A goto fired while the wait was in flight: the slot occupancy ends, the
  // memory-side registration stays and is defused by release's re-check.
  void abandon_wait(Pid p) {
    Proc& pr = procs_[p];
    if (pr.method == CapMethod::Wait) {
      waiters_[pr.slot].erase(p);
      pr.method = CapMethod::None;
      pr.sub = 0;
    }
  }

  void on_system_crash(Rng* rng) {
    for (auto& s : waiters_) s.clear();
    for (auto& pr : procs_) {
      pr.method = CapMethod::None;
      pr.sub = 0;
      pr.reg = rng ? Value::nat(rng->next()) : Value::bot();
      pr.ptr = pr.reg;
    }
  }

  void hash(Hash128& h) const {
    h.mix((static_cast<uint64_t>(abstract_.kind) << 56) ^ abstract_.payload);
    for (const auto& s : waiters_) {
      h.mix(s.size());
      for (Pid p : s) h.mix(p);
    }
    for (const auto& pr : procs_) {
      h.mix(static_cast<uint64_t>(pr.method) | (static_cast<uint64_t>(pr.sub) << 8) |
            (static_cast<uint64_t>(pr.slot) << 16));
      if (pr.method != CapMethod::None) {
        h.mix((static_cast<uint64_t>(pr.reg.kind) << 56) ^ pr.reg.payload);
        h.mix((static_cast<uint64_t>(pr.ptr.kind) << 56) ^ pr.ptr.payload);
      }
    }
  }

 private:
  struct Proc {
    CellId go = kNoCell;
    CapMethod method = CapMethod::None;
    uint8_t sub = 0;
    uint8_t slot = 0;
    Value reg;  // wait: seq snapshot; release: the (seq,flag) pair read
    Value ptr;  // release: current w[i] value
  };

  Value do_access(Memory& mem, Pid p, CellId cell, const MemOp& op, AccessInfo* info) {
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

  MethodStatus finish(Proc& pr, MethodStatus st) {
    pr.method = CapMethod::None;
    pr.sub = 0;
    st.outcome = StepOutcome::Done;
    return st;
  }

  MethodStatus step_wait(Memory& mem, Pid p, Proc& pr, AccessInfo* info) {
    MethodStatus st;
    switch (pr.sub) {
      case 0:
        pr.reg = do_access(mem, p, pr.go, MemOp::read(), info);
        pr.sub = 1;
        return st;
      case 1:
        do_access(mem, p, pr.go,
                  MemOp::write(Value::go_pair(pr.reg.go_seq() + 1, false)), info);
        pr.sub = 2;
        return st;
      case 2:
        do_access(mem, p, w_[pr.slot], MemOp::write(Value::ref(pr.go)), info);
        pr.sub = 3;
        return st;
      case 3: {
        Value v = do_access(mem, p, x_, MemOp::read(), info);
        if (v.is_bot()) return finish_wait(p, pr, st);
        pr.sub = 4;
        return st;
      }
      default: {
        Value v = do_access(mem, p, pr.go, MemOp::read(), info);
        if (v.go_flag()) return finish_wait(p, pr, st);
        return st;
      }
    }
  }

  MethodStatus finish_wait(Pid p, Proc& pr, MethodStatus st) {
    waiters_[pr.slot].erase(p);
    pr.method = CapMethod::None;
    pr.sub = 0;
    st.outcome = StepOutcome::Done;
    return st;
  }

  MethodStatus step_release(Memory& mem, Pid p, Proc& pr, AccessInfo* info) {
    MethodStatus st;
    if (pr.sub == 0) {
      do_access(mem, p, x_, MemOp::write(Value::bot()), info);
      abstract_ = Value::bot();
      pr.sub = 1;
      return st;
    }
    // sub = 1 + slot*4 + stage, stage 0: read w, 1: read *ptr, 2: re-read x,
    // 3: cas the registration's flag
    int slot = (pr.sub - 1) / 4;
    int stage = (pr.sub - 1) % 4;
    if (slot >= 3) {
      st.outcome = StepOutcome::Done;
      pr.method = CapMethod::None;
      pr.sub = 0;
      return st;
    }
    auto next_slot = [&]() { pr.sub = static_cast<uint8_t>(1 + (slot + 1) * 4); };
    switch (stage) {
      case 0: {
        pr.ptr = do_access(mem, p, w_[slot], MemOp::read(), info);
        if (pr.ptr.is_ref()) {
          pr.sub++;
        } else {
          next_slot();
        }
        break;
      }
      case 1: {
        pr.reg = do_access(mem, p, pr.ptr.as_ref(), MemOp::read(), info);
        if (!pr.reg.go_flag()) {
          pr.sub++;
        } else {
          next_slot();
        }
        break;
      }
      case 2: {
        Value v = do_access(mem, p, x_, MemOp::read(), info);
        if (v.is_bot()) {
          pr.sub++;
        } else {
          next_slot();
        }
        break;
      }
      default: {
        do_access(mem, p, pr.ptr.as_ref(),
                  MemOp::cas(Value::go_pair(pr.reg.go_seq(), false),
                             Value::go_pair(pr.reg.go_seq(), true)),
                  info);
        next_slot();
        break;
      }
    }
    if (pr.sub >= 1 + 3 * 4) {
      st.outcome = StepOutcome::Done;
      pr.method = CapMethod::None;
      pr.sub = 0;
    }
    return st;
  }

  std::string name_;
  CellId x_ = kNoCell;
  CellId w_[3] = {kNoCell, kNoCell, kNoCell};
  Value abstract_;
  std::set<Pid> waiters_[3];
  std::vector<Proc> procs_;
};

// Boolean flag with a single local-spin waiter; set wakes the registered
// waiter through its pointer, reset only lowers the flag.
class BoolSignal {
 public:
  BoolSignal() = default;
  explicit BoolSignal(std::string name) : name_(std::move(name)) {}

  void init_shared(Memory& mem) {
    x_ = mem.alloc_cell(true, kNoPid, Value::boolean(false), name_ + ".x");
    w_ = mem.alloc_cell(true, kNoPid, Value::bot(), name_ + ".w");
    abstract_ = false;
  }

  void register_proc(Memory& mem, Pid p) {
    if (p >= procs_.size()) procs_.resize(p + 1);
    if (procs_[p].go == kNoCell) {
      procs_[p].go = mem.alloc_cell(true, p, Value::boolean(false),
                                    name_ + ".go[p" + std::to_string(p) + "]");
    }
  }

  bool state() const { return abstract_; }
  CellId x_cell() const { return x_; }
  const std::string& name() const { return name_; }

  bool method_armed(Pid p) const {
    return p < procs_.size() && procs_[p].method != SigMethod::None;
  }

  std::optional<std::string> invoke(Memory& mem, Pid p, SigMethod m) {
    register_proc(mem, p);
    Proc& pr = procs_[p];
    assert(pr.method == SigMethod::None);
    pr.method = m;
    pr.sub = 0;
    if (m == SigMethod::Wait) {
      if (!waiters_.empty()) {
        waiters_.insert(p);
        return name_ + ": two concurrent waiters";
      }
      waiters_.insert(p);
    }
    return std::nullopt;
  }

  MethodStatus step(Memory& mem, Pid p, AccessInfo* info) {
    Proc& pr = procs_[p];
    MethodStatus st;
    switch (pr.method) {
      case SigMethod::Reset:
        do_access(mem, p, x_, MemOp::write(Value::boolean(false)), info);
        abstract_ = false;
        return finish(p, pr, st);
      case SigMethod::Set:
        switch (pr.sub) {
          case 0:
            do_access(mem, p, x_, MemOp::write(Value::boolean(true)), info);
            abstract_ = true;
            pr.sub = 1;
            return st;
          case 1:
            pr.ptr = do_access(mem, p, w_, MemOp::read(), info);
            if (!pr.ptr.is_ref()) return finish(p, pr, st);
            pr.sub = 2;
            return st;
          default:
            do_access(mem, p, pr.ptr.as_ref(), MemOp::write(Value::boolean(true)), info);
            return finish(p, pr, st);
        }
      case SigMethod::Wait:
        switch (pr.sub) {
          case 0:
            do_access(mem, p, pr.go, MemOp::write(Value::boolean(false)), info);
            pr.sub = 1;
            return st;
          case 1:
            do_access(mem, p, w_, MemOp::write(Value::ref(pr.go)), info);
            pr.sub = 2;
            return st;
          case 2: {
            Value v = do_access(mem, p, x_, MemOp::read(), info);
            if (v == Value::boolean(true)) return finish(p, pr, st);
            pr.sub = 3;
            return st;
          }
          default: {
            Value v = do_access(mem, p, pr.go, MemOp::read(), info);
            if (v == Value::boolean(true)) return finish(p, pr, st);
            return st;
          }
        }
      case SigMethod::None:
        break;
    }
    assert(false);
    return st;
  }

  void abandon_wait(Pid p) {
    Proc& pr = procs_[p];
    if (pr.method == SigMethod::Wait) {
      waiters_.erase(p);
      pr.method = SigMethod::None;
      pr.sub = 0;
    }
  }

  void on_system_crash(Rng* rng) {
    waiters_.clear();
    for (auto& pr : procs_) {
      pr.method = SigMethod::None;
      pr.sub = 0;
      pr.ptr = rng ? Value::nat(rng->next()) : Value::bot();
    }
  }

  void hash(Hash128& h) const {
    h.mix(abstract_ ? 0xdeadull : 0xbeefull);
    h.mix(waiters_.size());
    for (Pid p : waiters_) h.mix(p);
    for (const auto& pr : procs_) {
      h.mix(static_cast<uint64_t>(pr.method) | (static_cast<uint64_t>(pr.sub) << 8));
      if (pr.method != SigMethod::None) {
        h.mix((static_cast<uint64_t>(pr.ptr.kind) << 56) ^ pr.ptr.payload);
      }
    }
  }

 private:
  struct Proc {
    CellId go = kNoCell;
    SigMethod method = SigMethod::None;
    uint8_t sub = 0;
    Value ptr;
  };

  Value do_access(Memory& mem, Pid p, CellId cell, const MemOp& op, AccessInfo* info) {
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

  MethodStatus finish(Pid p, Proc& pr, MethodStatus st) {
    if (pr.method == SigMethod::Wait) waiters_.erase(p);
    pr.method = SigMethod::None;
    pr.sub = 0;
    st.outcome = StepOutcome::Done;
    return st;
  }

  std::string name_;
  CellId x_ = kNoCell;
  CellId w_ = kNoCell;
  bool abstract_ = false;
  std::set<Pid> waiters_;
  std::vector<Proc> procs_;
};

}  // namespace rmelab
