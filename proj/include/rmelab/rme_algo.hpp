#pragma once

#include <array>
#include <cassert>
#include <optional>
#include <string>
#include <vector>

#include "rmelab/base_lock.hpp"
#include "rmelab/labels.hpp"
#include "rmelab/memory.hpp"
#include "rmelab/trace.hpp"
#include "rmelab/wait_objects.hpp"

namespace rmelab {

enum class Algo : uint8_t { CC, DSM };

inline const char* to_string(Algo a) { return a == Algo::CC ? "cc" : "dsm"; }

// Single-line mutants used by the checker-sensitivity tests.
enum class Mutation : uint8_t {
  None,
  DropR5,         // never raise the stop flag after installing a lock
  DropE3,         // never release the barrier on exit
  SwapR3R4,       // advance Seq before lowering the spare lock's stop flag
  SkipAbandon8_1, // migrate without abandoning the old lock
};

enum class SectionStatus : uint8_t { InProgress, EnteredCS, InRemainder };

struct StepOut {
  AccessInfo access;
  Pc pc_from = Pc::Rem;
  Pc pc_to = Pc::Rem;
  SectionStatus status = SectionStatus::InProgress;
  std::vector<std::pair<ViolationCode, std::string>> violations;
};

// Snapshot handed to the invariant evaluator. Stop and Barrier read through
// the signal/capturable abstract states on the DSM variant.
struct InvariantView {
  Algo algo = Algo::CC;
  uint64_t seq = 1;
  bool stop[3] = {false, false, false};
  Value barrier;
  struct P {
    Pid pid;
    Pc pc;
    Status status;
    bool active;
    uint64_t s;
  };
  std::vector<P> procs;
  std::array<const GhostSets*, 3> lock_ghost{};
};

// The recoverable lock: a sequence number rotating through three base locks,
// stop flags that tell stranded waiters to migrate, and a barrier word that
// names the critical-section owner. One instance drives either variant; the
// DSM variant swaps the barrier and stop words for capturable/signal objects
// and exits abandoned locks instead of polling stop flags inside the queue.
class RmeAlgo {
 public:
  RmeAlgo(Algo algo, Mutation mutation = Mutation::None)
      : algo_(algo), mutation_(mutation) {
    const char* flavor = algo == Algo::CC ? "cc" : "dsm";
    for (int i = 0; i < 3; ++i) {
      locks_[i] = BaseLock(algo == Algo::CC ? LockFlavor::CC : LockFlavor::DSM,
                           std::string("Lock[") + std::to_string(i) + "]");
    }
    (void)flavor;
    if (algo == Algo::DSM) {
      for (int i = 0; i < 3; ++i) {
        stops_[i] = BoolSignal("Stop[" + std::to_string(i) + "]");
      }
      csowner_ = Capturable("CSowner");
    }
  }

  void init_shared(Memory& mem) {
    seq_cell_ = mem.alloc_cell(true, kNoPid, Value::nat(1), "Seq");
    for (int i = 0; i < 3; ++i) locks_[i].init_shared(mem);
    if (algo_ == Algo::CC) {
      for (int i = 0; i < 3; ++i) {
        stop_cells_[i] = mem.alloc_cell(true, kNoPid, Value::boolean(false),
                                        "Stop[" + std::to_string(i) + "]");
      }
      barrier_cell_ = mem.alloc_cell(true, kNoPid, Value::bot(), "Barrier");
    } else {
      for (int i = 0; i < 3; ++i) stops_[i].init_shared(mem);
      csowner_.init_shared(mem);
    }
  }

  Algo algo() const { return algo_; }
  Mutation mutation() const { return mutation_; }

  bool is_registered(Pid p) const {
    return p < procs_.size() && procs_[p].registered;
  }

  // Dynamic joining: a process's persistent locals (and, on DSM, its go
  // cells) come into existence at its first invocation.
  void register_proc(Memory& mem, Pid p) {
    if (p >= procs_.size()) procs_.resize(p + 1);
    if (procs_[p].registered) return;
    procs_[p].registered = true;
    mem.ensure_proc(p);
    if (algo_ == Algo::DSM) {
      csowner_.register_proc(mem, p);
      for (int i = 0; i < 3; ++i) stops_[i].register_proc(mem, p);
    }
  }

  struct Proc {
    bool registered = false;
    Pc pc = Pc::Rem;
    Status status = Status::Good;
    bool active = false;  // persistent
    uint64_t s = 1;       // persistent
    uint64_t x = 0;       // volatile exit-time Seq snapshot (DSM)
    uint8_t arm = 0;      // volatile parallel-line toggle
  };

  const Proc& proc(Pid p) const { return procs_[p]; }
  size_t proc_slots() const { return procs_.size(); }

  std::optional<std::string> invoke(Memory& mem, Pid p, Section section) {
    register_proc(mem, p);
    Proc& pr = procs_[p];
    switch (section) {
      case Section::Try:
        if (pr.pc != Pc::Rem || pr.status != Status::Good) {
          return "try invoked outside remainder/good by p" + std::to_string(p);
        }
        pr.pc = Pc::T1;
        return std::nullopt;
      case Section::Exit:
        if (pr.pc != Pc::CS) {
          return "exit invoked outside CS by p" + std::to_string(p);
        }
        pr.pc = Pc::E1;
        return std::nullopt;
      case Section::Recover:
        if (pr.pc != Pc::Rem) {
          return "recover invoked outside remainder by p" + std::to_string(p);
        }
        pr.pc = Pc::R1;
        return std::nullopt;
    }
    return std::nullopt;
  }

  bool in_section(Pid p) const {
    return is_registered(p) && procs_[p].pc != Pc::Rem && procs_[p].pc != Pc::CS;
  }

  void step(Memory& mem, Pid p, StepOut* out) {
    Proc& pr = procs_[p];
    out->pc_from = pr.pc;
    out->status = SectionStatus::InProgress;
    switch (pr.pc) {
      case Pc::T1:
        pr.active = true;
        goto_line(mem, p, pr, Pc::T2, out);
        break;
      case Pc::T2:
        pr.s = read_seq(mem, p, out);
        goto_line(mem, p, pr, Pc::T3, out);
        break;
      case Pc::T3:
        step_t3(mem, p, pr, out);
        break;
      case Pc::T5: {
        uint64_t v = read_seq(mem, p, out);
        goto_line(mem, p, pr, v != pr.s ? Pc::T9 : Pc::T6, out);
        break;
      }
      case Pc::T6:
        step_t6(mem, p, pr, out);
        break;
      case Pc::T7:
      case Pc::T12: {
        bool won;
        if (algo_ == Algo::CC) {
          Value r = cc_access(mem, p, barrier_cell_,
                              MemOp::cas(Value::bot(), Value::pid(p)), out);
          won = r.as_bool();
        } else {
          MethodStatus st = csowner_.step(mem, p, &out->access);
          assert(st.outcome == StepOutcome::Done);
          won = st.result.as_bool();
        }
        if (won) {
          enter_cs(pr, out);
        } else {
          goto_line(mem, p, pr, pr.pc == Pc::T7 ? Pc::T8 : Pc::T13, out);
        }
        break;
      }
      case Pc::T8: {
        uint64_t v = read_seq(mem, p, out);
        goto_line(mem, p, pr, v != pr.s ? Pc::T9 : Pc::T13, out);
        break;
      }
      case Pc::T9:
        pr.s += 1;
        if (algo_ == Algo::DSM && mutation_ != Mutation::SkipAbandon8_1) {
          goto_line(mem, p, pr, Pc::T9_1, out);
        } else {
          goto_line(mem, p, pr, Pc::T10, out);
        }
        break;
      case Pc::T9_1:
        if (locks_[mod3(pr.s - 1)].step(mem, p, &out->access) == StepOutcome::Done) {
          goto_line(mem, p, pr, Pc::T10, out);
        }
        break;
      case Pc::T10:
        if (locks_[mod3(pr.s)].step(mem, p, &out->access) == StepOutcome::Done) {
          goto_line(mem, p, pr, Pc::T11, out);
        }
        break;
      case Pc::T11:
      case Pc::T13: {
        bool open;
        if (algo_ == Algo::CC) {
          Value v = cc_access(mem, p, barrier_cell_, MemOp::read(), out);
          open = v.is_bot();
        } else {
          MethodStatus st = csowner_.step(mem, p, &out->access);
          open = st.outcome == StepOutcome::Done;
        }
        if (open) {
          goto_line(mem, p, pr, pr.pc == Pc::T11 ? Pc::T12 : Pc::T14, out);
        }
        break;
      }
      case Pc::T14:
        if (algo_ == Algo::CC) {
          cc_access(mem, p, barrier_cell_, MemOp::write(Value::pid(p)), out);
          enter_cs(pr, out);
        } else {
          MethodStatus st = csowner_.step(mem, p, &out->access);
          assert(st.outcome == StepOutcome::Done);
          (void)st;
          enter_cs(pr, out);
        }
        break;
      case Pc::E1: {
        uint64_t v = read_seq(mem, p, out);
        pr.x = v;
        Pc next;
        if (pr.s == v) {
          next = Pc::E2;
        } else if (algo_ == Algo::DSM && pr.s == v - 1) {
          next = Pc::E2_1;
        } else {
          next = exit_release_line();
        }
        goto_line(mem, p, pr, next, out);
        break;
      }
      case Pc::E2:
      case Pc::E2_1:
        if (locks_[mod3(pr.s)].step(mem, p, &out->access) == StepOutcome::Done) {
          goto_line(mem, p, pr, exit_release_line(), out);
        }
        break;
      case Pc::E3:
        if (algo_ == Algo::CC) {
          cc_access(mem, p, barrier_cell_, MemOp::write(Value::bot()), out);
          goto_line(mem, p, pr, Pc::E4, out);
        } else {
          MethodStatus st = csowner_.step(mem, p, &out->access);
          if (st.outcome == StepOutcome::Done) goto_line(mem, p, pr, Pc::E4, out);
        }
        break;
      case Pc::E4:
        pr.active = false;
        leave_to_remainder(pr, out);
        break;
      case Pc::R1:
        if (!pr.active) {
          goto_line(mem, p, pr, recover_skip_line(), out);
        } else {
          uint64_t v = read_seq(mem, p, out);
          goto_line(mem, p, pr, v == pr.s ? Pc::R2 : recover_skip_line(), out);
        }
        break;
      case Pc::R2:
        if (locks_[mod3(pr.s - 1)].step(mem, p, &out->access) == StepOutcome::Done) {
          goto_line(mem, p, pr, Pc::R3, out);
        }
        break;
      case Pc::R3:
        step_r3r4(mem, p, pr, out, /*label_r3=*/true);
        break;
      case Pc::R4:
        step_r3r4(mem, p, pr, out, /*label_r3=*/false);
        break;
      case Pc::R5:
        if (algo_ == Algo::CC) {
          cc_access(mem, p, stop_cells_[mod3(pr.s)],
                    MemOp::write(Value::boolean(true)), out);
          goto_line(mem, p, pr, Pc::R6, out);
        } else {
          MethodStatus st = stops_[mod3(pr.s)].step(mem, p, &out->access);
          if (st.outcome == StepOutcome::Done) {
            goto_line(mem, p, pr, Pc::R5_1, out);
          }
        }
        break;
      case Pc::R5_1:
        step_r5_1(mem, p, pr, out);
        break;
      case Pc::R6: {
        bool mine;
        if (algo_ == Algo::CC) {
          Value v = cc_access(mem, p, barrier_cell_, MemOp::read(), out);
          mine = v == Value::pid(p);
        } else {
          MethodStatus st = csowner_.step(mem, p, &out->access);
          assert(st.outcome == StepOutcome::Done);
          mine = st.result == Value::pid(p);
        }
        if (mine) {
          pr.status = Status::Good;  // returning from recover restores the correct state
          enter_cs(pr, out);
        } else {
          goto_line(mem, p, pr, Pc::R7, out);
        }
        break;
      }
      case Pc::R7:
        pr.active = false;
        goto_line(mem, p, pr, Pc::R8, out);
        break;
      case Pc::R8:
        pr.status = Status::Good;
        leave_to_remainder(pr, out);
        break;
      case Pc::Rem:
      case Pc::CS:
        assert(false && "step() called outside a section");
        break;
    }
    out->pc_to = pr.pc;
  }

  // Crash effects on the process machine only; the engine separately crashes
  // the substrate, the locks, and the objects.
  void on_crash(Pid p, Rng* rng) {
    if (!is_registered(p)) return;
    Proc& pr = procs_[p];
    if (pr.status == Status::Good) {
      if (in_try_section(pr.pc)) {
        pr.status = Status::RecoverFromTry;
      } else if (pr.pc == Pc::CS) {
        pr.status = Status::RecoverFromCs;
      } else if (in_exit_section(pr.pc)) {
        pr.status = Status::RecoverFromExit;
      } else if (in_recover_section(pr.pc)) {
        pr.status = Status::RecoverFromRem;
      }
    }
    pr.pc = Pc::Rem;
    pr.arm = 0;
    pr.x = rng ? rng->next() : 0;
  }

  void crash_sub_machines(Rng* rng) {
    for (auto& l : locks_) l.on_system_crash(rng);
    if (algo_ == Algo::DSM) {
      for (auto& s : stops_) s.on_system_crash(rng);
      csowner_.on_system_crash(rng);
    }
  }

  // ---- checker access ----

  uint64_t seq_value(const Memory& mem) const {
    return mem.peek(seq_cell_).as_nat();
  }
  bool stop_state(const Memory& mem, int i) const {
    return algo_ == Algo::CC ? mem.peek(stop_cells_[i]).as_bool()
                             : stops_[i].state();
  }
  Value barrier_state(const Memory& mem) const {
    return algo_ == Algo::CC ? mem.peek(barrier_cell_) : csowner_.state();
  }
  const BaseLock& lock(int i) const { return locks_[i]; }
  BaseLock& lock_mut(int i) { return locks_[i]; }
  Capturable& csowner() { return csowner_; }
  BoolSignal& stop_signal(int i) { return stops_[i]; }
  CellId seq_cell() const { return seq_cell_; }

  // The objects' abstract state must mirror their x word after every step.
  std::optional<std::string> mirror_divergence(const Memory& mem) const {
    if (algo_ == Algo::CC) return std::nullopt;
    if (!(csowner_.state() == mem.peek(csowner_x_cell()))) {
      return std::string("CSowner abstract state diverged from x");
    }
    for (int i = 0; i < 3; ++i) {
      if (stops_[i].state() != mem.peek(stops_[i].x_cell()).as_bool()) {
        return "Stop[" + std::to_string(i) + "] abstract state diverged from x";
      }
    }
    return std::nullopt;
  }
  CellId csowner_x_cell() const { return csowner_.x_cell(); }

  InvariantView view(const Memory& mem) const {
    InvariantView v;
    v.algo = algo_;
    v.seq = seq_value(mem);
    for (int i = 0; i < 3; ++i) {
      v.stop[i] = stop_state(mem, i);
      v.lock_ghost[i] = &locks_[i].ghost();
    }
    v.barrier = barrier_state(mem);
    for (Pid p = 0; p < procs_.size(); ++p) {
      if (!procs_[p].registered) continue;
      Pc pc = procs_[p].pc;
      // The DSM release line spans several steps but takes effect at its
      // first one; for the invariant a process past that point has left E3.
      if (pc == Pc::E3 && algo_ == Algo::DSM && csowner_.release_linearized(p)) {
        pc = Pc::E4;
      }
      v.procs.push_back({p, pc, procs_[p].status, procs_[p].active,
                         procs_[p].s});
    }
    return v;
  }

  void hash(Hash128& h) const {
    for (const auto& pr : procs_) {
      if (!pr.registered) {
        h.mix(0);
        continue;
      }
      h.mix(1ull | (static_cast<uint64_t>(pr.pc) << 8) |
            (static_cast<uint64_t>(pr.status) << 16) |
            (static_cast<uint64_t>(pr.active) << 24) |
            (static_cast<uint64_t>(pr.arm) << 32));
      h.mix(pr.s);
      if (in_exit_section(pr.pc)) h.mix(pr.x);
    }
    for (const auto& l : locks_) l.hash(h);
    if (algo_ == Algo::DSM) {
      for (const auto& s : stops_) s.hash(h);
      csowner_.hash(h);
    }
  }

 private:
  static int mod3(uint64_t v) { return static_cast<int>(v % 3); }

  Pc exit_release_line() const {
    return mutation_ == Mutation::DropE3 ? Pc::E4 : Pc::E3;
  }
  Pc recover_skip_line() const {
    return algo_ == Algo::DSM ? Pc::R5_1 : Pc::R6;
  }
  Pc after_r4_line() const {
    if (mutation_ == Mutation::DropR5) return recover_skip_line() == Pc::R5_1 ? Pc::R5_1 : Pc::R6;
    return Pc::R5;
  }

  Value cc_access(Memory& mem, Pid p, CellId cell, const MemOp& op, StepOut* out) {
    AccessResult r = mem.access(p, cell, op);
    out->access.happened = true;
    out->access.cell = cell;
    out->access.op = op.kind;
    out->access.after = r.after;
    out->access.rmr_cc = r.rmr_cc;
    out->access.rmr_dsm = r.rmr_dsm;
    return r.result;
  }

  uint64_t read_seq(Memory& mem, Pid p, StepOut* out) {
    return cc_access(mem, p, seq_cell_, MemOp::read(), out).as_nat();
  }

  void enter_cs(Proc& pr, StepOut* out) {
    pr.pc = Pc::CS;
    out->status = SectionStatus::EnteredCS;
  }

  void leave_to_remainder(Proc& pr, StepOut* out) {
    pr.pc = Pc::Rem;
    out->status = SectionStatus::InRemainder;
  }

  void report(StepOut* out, ViolationCode code, std::optional<std::string> detail) {
    if (detail) out->violations.emplace_back(code, std::move(*detail));
  }

  // Entering a line performs its arming: base-lock and object methods are
  // invoked here so that ghost transitions land with the step that moves the
  // program counter.
  void goto_line(Memory& mem, Pid p, Proc& pr, Pc target, StepOut* out) {
    pr.pc = target;
    pr.arm = 0;
    switch (target) {
      case Pc::T3:
        report(out, ViolationCode::UsePattern,
               locks_[mod3(pr.s)].invoke(mem, p, BlMethod::Try));
        break;
      case Pc::T6:
        if (algo_ == Algo::DSM) {
          report(out, ViolationCode::WaitSingle,
                 stops_[mod3(pr.s)].invoke(mem, p, SigMethod::Wait));
          report(out, ViolationCode::WaitSingle,
                 csowner_.invoke(mem, p, CapMethod::Wait, mod3(pr.s)));
        }
        break;
      case Pc::T7:
      case Pc::T12:
        if (algo_ == Algo::DSM) csowner_.invoke(mem, p, CapMethod::Capture);
        break;
      case Pc::T9_1:
        locks_[mod3(pr.s - 1)].invoke(mem, p, BlMethod::Abandon);
        break;
      case Pc::T10:
        report(out, ViolationCode::UsePattern,
               locks_[mod3(pr.s)].invoke(mem, p, BlMethod::Try));
        break;
      case Pc::T11:
      case Pc::T13:
        if (algo_ == Algo::DSM) {
          report(out, ViolationCode::WaitSingle,
                 csowner_.invoke(mem, p, CapMethod::Wait, mod3(pr.s)));
        }
        break;
      case Pc::T14:
        if (algo_ == Algo::DSM) csowner_.invoke(mem, p, CapMethod::Write);
        break;
      case Pc::E2:
        report(out, ViolationCode::UsePattern,
               locks_[mod3(pr.s)].invoke(mem, p, BlMethod::Exit));
        break;
      case Pc::E2_1:
        locks_[mod3(pr.s)].invoke(mem, p, BlMethod::Abandon);
        break;
      case Pc::E3:
        if (algo_ == Algo::DSM) csowner_.invoke(mem, p, CapMethod::Release);
        break;
      case Pc::R2:
        report(out, ViolationCode::UsePattern,
               locks_[mod3(pr.s - 1)].invoke(mem, p, BlMethod::Reset));
        break;
      case Pc::R3:
        if (algo_ == Algo::DSM && mutation_ != Mutation::SwapR3R4) {
          stops_[mod3(pr.s - 1)].invoke(mem, p, SigMethod::Reset);
        }
        break;
      case Pc::R4:
        if (algo_ == Algo::DSM && mutation_ == Mutation::SwapR3R4) {
          stops_[mod3(pr.s - 1)].invoke(mem, p, SigMethod::Reset);
        }
        break;
      case Pc::R5:
        if (algo_ == Algo::DSM) stops_[mod3(pr.s)].invoke(mem, p, SigMethod::Set);
        break;
      case Pc::R6:
        if (algo_ == Algo::DSM) csowner_.invoke(mem, p, CapMethod::Read);
        break;
      default:
        break;
    }
  }

  void step_t3(Memory& mem, Pid p, Proc& pr, StepOut* out) {
    if (algo_ == Algo::DSM) {
      if (locks_[mod3(pr.s)].step(mem, p, &out->access) == StepOutcome::Done) {
        goto_line(mem, p, pr, Pc::T5, out);
      }
      return;
    }
    if (pr.arm == 0) {
      Value v = cc_access(mem, p, stop_cells_[mod3(pr.s)], MemOp::read(), out);
      pr.arm = 1;
      if (v.as_bool()) {
        // The stop flag fired mid-try: the in-flight try is dropped (its
        // ghost membership stays until the lock is reset) and control falls
        // to the sequence check.
        locks_[mod3(pr.s)].abort_method(p);
        goto_line(mem, p, pr, Pc::T5, out);
      }
    } else {
      pr.arm = 0;
      if (locks_[mod3(pr.s)].step(mem, p, &out->access) == StepOutcome::Done) {
        goto_line(mem, p, pr, Pc::T5, out);
      }
    }
  }

  void step_t6(Memory& mem, Pid p, Proc& pr, StepOut* out) {
    if (algo_ == Algo::CC) {
      if (pr.arm == 0) {
        Value v = cc_access(mem, p, stop_cells_[mod3(pr.s)], MemOp::read(), out);
        pr.arm = 1;
        if (v.as_bool()) goto_line(mem, p, pr, Pc::T9, out);
      } else {
        Value v = cc_access(mem, p, barrier_cell_, MemOp::read(), out);
        pr.arm = 0;
        if (v.is_bot()) goto_line(mem, p, pr, Pc::T7, out);
      }
      return;
    }
    if (pr.arm == 0) {
      MethodStatus st = stops_[mod3(pr.s)].step(mem, p, &out->access);
      pr.arm = 1;
      if (st.outcome == StepOutcome::Done) {
        csowner_.abandon_wait(p);
        goto_line(mem, p, pr, Pc::T9, out);
      }
    } else {
      MethodStatus st = csowner_.step(mem, p, &out->access);
      pr.arm = 0;
      if (st.outcome == StepOutcome::Done) {
        stops_[mod3(pr.s)].abandon_wait(p);
        goto_line(mem, p, pr, Pc::T7, out);
      }
    }
  }

  void step_r3r4(Memory& mem, Pid p, Proc& pr, StepOut* out, bool label_r3) {
    bool do_seq_write = label_r3 == (mutation_ == Mutation::SwapR3R4);
    if (do_seq_write) {
      cc_access(mem, p, seq_cell_, MemOp::write(Value::nat(pr.s + 1)), out);
    } else {
      if (algo_ == Algo::CC) {
        cc_access(mem, p, stop_cells_[mod3(pr.s - 1)],
                  MemOp::write(Value::boolean(false)), out);
      } else {
        MethodStatus st = stops_[mod3(pr.s - 1)].step(mem, p, &out->access);
        if (st.outcome != StepOutcome::Done) return;
      }
    }
    goto_line(mem, p, pr, label_r3 ? Pc::R4 : after_r4_line(), out);
  }

  void step_r5_1(Memory& mem, Pid p, Proc& pr, StepOut* out) {
    if (pr.arm == 0) {
      uint64_t v = read_seq(mem, p, out);
      if (pr.s == v - 1) {
        locks_[mod3(pr.s)].invoke(mem, p, BlMethod::Abandon);
        pr.arm = 1;
      } else {
        goto_line(mem, p, pr, Pc::R6, out);
      }
    } else {
      if (locks_[mod3(pr.s)].step(mem, p, &out->access) == StepOutcome::Done) {
        goto_line(mem, p, pr, Pc::R6, out);
      }
    }
  }

  Algo algo_;
  Mutation mutation_;
  CellId seq_cell_ = kNoCell;
  CellId stop_cells_[3] = {kNoCell, kNoCell, kNoCell};
  CellId barrier_cell_ = kNoCell;
  std::array<BaseLock, 3> locks_;
  std::array<BoolSignal, 3> stops_;
  Capturable csowner_;
  std::vector<Proc> procs_;
};

}  // namespace rmelab
