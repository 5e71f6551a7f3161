#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <vector>

#include "rmelab/memory.hpp"
#include "rmelab/rme_algo.hpp"
#include "rmelab/trace.hpp"

namespace rmelab {

enum class ProcAction : uint8_t { InvokeTry, InvokeRecover, InvokeExit, Dwell, Step };

inline const char* to_string(ProcAction a) {
  switch (a) {
    case ProcAction::InvokeTry: return "invoke_try";
    case ProcAction::InvokeRecover: return "invoke_recover";
    case ProcAction::InvokeExit: return "invoke_exit";
    case ProcAction::Dwell: return "dwell";
    case ProcAction::Step: return "step";
  }
  return "?";
}

struct EngineOptions {
  Algo algo = Algo::CC;
  Mutation mutation = Mutation::None;
  uint32_t cs_dwell = 2;        // steps spent inside the CS before exiting
  bool record_trace = true;
  bool poison_crash = false;    // canonical crash effects for exploration
  uint64_t scramble_seed = 1;
  uint32_t sp_cap = 0;          // stop starting attempts after this many
                                // completed super-passages (0 = unbounded)
  bool allow_good_recover = false;
};

// Owns one simulated world: substrate, algorithm machine, client driver and
// bookkeeping. Value-semantic on purpose — exploration snapshots it.
class Engine {
 public:
  explicit Engine(const EngineOptions& opt)
      : opt_(opt),
        rme_(opt.algo, opt.mutation),
        rng_(opt.scramble_seed),
        sink_(opt.record_trace) {
    rme_.init_shared(mem_);
  }

  void register_process(Pid p) {
    rme_.register_proc(mem_, p);
    if (p >= driver_.size()) driver_.resize(p + 1);
    if (p + 1 > nprocs_) nprocs_ = p + 1;
  }

  Pid process_count() const { return nprocs_; }

  // The client automaton's choices for a scheduled process. Random and
  // round-robin drivers take the first entry; exploration branches over all.
  void enabled_actions(Pid p, std::vector<ProcAction>* out) const {
    out->clear();
    const auto& pr = rme_.proc(p);
    const auto& d = driver_[p];
    if (pr.pc == Pc::Rem) {
      if (pr.status != Status::Good) {
        out->push_back(ProcAction::InvokeRecover);
        return;
      }
      bool capped = opt_.sp_cap != 0 && d.sp_done >= opt_.sp_cap;
      if (!capped) {
        out->push_back(ProcAction::InvokeTry);
        if (opt_.allow_good_recover) out->push_back(ProcAction::InvokeRecover);
      }
      return;
    }
    if (pr.pc == Pc::CS) {
      out->push_back(d.dwell_left > 0 ? ProcAction::Dwell : ProcAction::InvokeExit);
      return;
    }
    out->push_back(ProcAction::Step);
  }

  bool has_action(Pid p) const {
    std::vector<ProcAction> a;
    enabled_actions(p, &a);
    return !a.empty();
  }

  // One scheduled slot of process p.
  void apply(Pid p, ProcAction action) {
    register_process(p);
    Driver& d = driver_[p];
    uint64_t idx = step_++;
    switch (action) {
      case ProcAction::InvokeTry:
      case ProcAction::InvokeRecover:
      case ProcAction::InvokeExit: {
        Section section = action == ProcAction::InvokeTry      ? Section::Try
                          : action == ProcAction::InvokeExit   ? Section::Exit
                                                               : Section::Recover;
        auto violation = rme_.invoke(mem_, p, section);
        if (violation) {
          TraceEvent ev;
          ev.step = idx;
          ev.kind = EvKind::Violation;
          ev.pid = p;
          ev.code = ViolationCode::Protocol;
          ev.detail = *violation;
          sink_.emit(std::move(ev));
          return;
        }
        if (section != Section::Exit && !d.in_passage) {
          mem_.begin_passage(p);
          d.in_passage = true;
        }
        d.section = section;
        d.section_steps = 0;
        d.section_lines = 0;
        TraceEvent ev;
        ev.step = idx;
        ev.kind = EvKind::SectionEnter;
        ev.pid = p;
        ev.section = section;
        sink_.emit(std::move(ev));
        break;
      }
      case ProcAction::Dwell:
        assert(rme_.proc(p).pc == Pc::CS && d.dwell_left > 0);
        d.dwell_left--;
        break;
      case ProcAction::Step: {
        StepOut out;
        rme_.step(mem_, p, &out);
        d.section_steps++;
        if (out.pc_from != out.pc_to) d.section_lines++;
        if (out.access.happened && sink_.recording()) {
          TraceEvent ev;
          ev.step = idx;
          ev.kind = EvKind::Access;
          ev.pid = p;
          ev.cell = out.access.cell;
          ev.op = out.access.op;
          ev.value = out.access.after;
          ev.rmr_cc = out.access.rmr_cc;
          ev.rmr_dsm = out.access.rmr_dsm;
          ev.pc_from = to_string(out.pc_from);
          ev.pc_to = to_string(out.pc_to);
          sink_.emit(std::move(ev));
        }
        for (auto& [code, detail] : out.violations) {
          TraceEvent ev;
          ev.step = idx;
          ev.kind = EvKind::Violation;
          ev.pid = p;
          ev.code = code;
          ev.detail = detail;
          sink_.emit(std::move(ev));
        }
        if (out.status != SectionStatus::InProgress) {
          finish_section(p, idx, out.status);
        }
        check_mirror(idx, p);
        break;
      }
    }
  }

  // Convenience: run the driver's default choice.
  bool step_process(Pid p) {
    std::vector<ProcAction> a;
    enabled_actions(p, &a);
    if (a.empty()) return false;
    apply(p, a.front());
    return true;
  }

  // System-wide crash: substrate, locks, objects, every process. Open
  // passages close here and reopen at the next section entry.
  void inject_crash() {
    uint64_t idx = step_++;
    TraceEvent ev;
    ev.step = idx;
    ev.kind = EvKind::Crash;
    sink_.emit(std::move(ev));
    Rng* rng = opt_.poison_crash ? nullptr : &rng_;
    for (Pid p = 0; p < rme_.proc_slots(); ++p) {
      if (!rme_.is_registered(p)) continue;
      if (rme_.proc(p).pc == Pc::CS) {
        csr_owner_ = p;
      }
      if (driver_[p].in_passage) {
        close_passage(p, idx);
      }
      rme_.on_crash(p, rng);
      driver_[p].dwell_left = 0;
    }
    rme_.crash_sub_machines(rng);
    mem_.system_crash(rng);
    crash_count_++;
  }

  uint64_t step_count() const { return step_; }
  uint64_t crash_count() const { return crash_count_; }

  const Memory& memory() const { return mem_; }
  Memory& memory_mut() { return mem_; }
  const RmeAlgo& rme() const { return rme_; }
  RmeAlgo& rme_mut() { return rme_; }
  TraceSink& sink() { return sink_; }
  const TraceSink& sink() const { return sink_; }
  const EngineOptions& options() const { return opt_; }

  std::optional<Pid> csr_owner() const { return csr_owner_; }
  bool csr_violated() const { return csr_violated_; }
  bool mirror_violated() const { return mirror_violated_; }

  uint32_t completed_super_passages(Pid p) const { return driver_[p].sp_done; }

  int procs_in_cs() const {
    int n = 0;
    for (Pid p = 0; p < rme_.proc_slots(); ++p) {
      if (rme_.is_registered(p) && rme_.proc(p).pc == Pc::CS) n++;
    }
    return n;
  }

  // Every registered process parked in the remainder, recovered, and out of
  // super-passage budget: nothing can ever run again.
  bool quiescent() const {
    for (Pid p = 0; p < nprocs_; ++p) {
      if (has_action(p)) return false;
    }
    return true;
  }

  InvariantView invariant_view() const { return rme_.view(mem_); }

  Hash128 fingerprint() const {
    Hash128 h;
    mem_.hash_cells(h);
    rme_.hash(h);
    for (const auto& d : driver_) {
      h.mix(d.dwell_left | (static_cast<uint64_t>(d.sp_done) << 16));
    }
    h.mix(csr_owner_ ? *csr_owner_ + 1 : 0);
    return h;
  }

 private:
  struct Driver {
    bool in_passage = false;
    uint32_t dwell_left = 0;
    uint32_t sp_done = 0;
    Section section = Section::Try;
    uint64_t section_steps = 0;
    uint32_t section_lines = 0;
  };

  void close_passage(Pid p, uint64_t idx) {
    auto [cc, dsm] = mem_.close_passage(p);
    driver_[p].in_passage = false;
    TraceEvent ev;
    ev.step = idx;
    ev.kind = EvKind::PassageClose;
    ev.pid = p;
    ev.passage_cc = cc;
    ev.passage_dsm = dsm;
    sink_.emit(std::move(ev));
  }

  void finish_section(Pid p, uint64_t idx, SectionStatus st) {
    Driver& d = driver_[p];
    TraceEvent ev;
    ev.step = idx;
    ev.kind = EvKind::SectionReturn;
    ev.pid = p;
    ev.section = d.section;
    ev.result = st == SectionStatus::EnteredCS ? SectionResult::EnteredCS
                                               : SectionResult::InRemainder;
    ev.span_steps = d.section_steps;
    ev.span_lines = d.section_lines;
    sink_.emit(std::move(ev));
    if (st == SectionStatus::EnteredCS) {
      d.dwell_left = opt_.cs_dwell;
      if (csr_owner_) {
        if (*csr_owner_ == p) {
          csr_owner_.reset();
        } else {
          csr_violated_ = true;
        }
      }
    } else {
      if (csr_owner_ && *csr_owner_ == p && d.section == Section::Recover) {
        // A process that crashed in the CS must be put back there.
        csr_violated_ = true;
      }
      if (d.section == Section::Exit) d.sp_done++;
      close_passage(p, idx);
    }
  }

  void check_mirror(uint64_t idx, Pid p) {
    auto div = rme_.mirror_divergence(mem_);
    if (div) {
      mirror_violated_ = true;
      TraceEvent ev;
      ev.step = idx;
      ev.kind = EvKind::Violation;
      ev.pid = p;
      ev.code = ViolationCode::StateMirror;
      ev.detail = *div;
      sink_.emit(std::move(ev));
    }
  }

  EngineOptions opt_;
  Memory mem_;
  RmeAlgo rme_;
  Rng rng_;
  TraceSink sink_;
  std::vector<Driver> driver_;
  Pid nprocs_ = 0;
  uint64_t step_ = 0;
  uint64_t crash_count_ = 0;
  std::optional<Pid> csr_owner_;
  bool csr_violated_ = false;
  bool mirror_violated_ = false;
};

}  // namespace rmelab
