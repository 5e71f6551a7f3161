#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "rmelab/config.hpp"
#include "rmelab/engine.hpp"
#include "rmelab/invariant.hpp"
#include "rmelab/properties.hpp"

namespace rmelab {

struct RunReport {
  std::vector<PropertyVerdict> verdicts;
  size_t violations = 0;
  uint64_t steps = 0;
  uint64_t crashes = 0;
  bool drained = true;
  uint32_t max_sched_gap = 0;  // worst observed non-remainder scheduling gap
  uint64_t max_passage_cc = 0;
  uint64_t max_passage_dsm = 0;
  uint64_t max_try_window = 0;  // global steps, after the last crash
  std::vector<int> invariant_failures;  // condition ids seen (run-mode checks)

  bool ok() const {
    return all_pass(verdicts) && violations == 0 && invariant_failures.empty();
  }
};

struct RunOutcome {
  RunReport report;
  Trace trace;
  std::vector<std::string> cell_names;
};

// Executes one seeded run: the scheduler picks a process (or a crash fires),
// the client driver advances it one slot, and the trace feeds the property
// suite at the end. The fair scheduler guarantees every non-remainder
// process a slot within any window of B steps.
inline RunOutcome run(const RunConfig& cfg) {
  EngineOptions opt;
  opt.algo = cfg.algo;
  opt.mutation = cfg.mutation;
  opt.cs_dwell = cfg.cs_dwell;
  opt.record_trace = cfg.record_trace;
  opt.scramble_seed = cfg.seed ^ 0xabcd1234u;
  Engine eng(opt);
  for (Pid p = 0; p < cfg.procs; ++p) eng.register_process(p);

  Rng sched_rng(cfg.seed);
  const uint32_t bound = cfg.effective_fairness_bound();
  std::vector<uint32_t> since(cfg.procs, 0);
  uint32_t max_gap = 0;
  std::vector<uint64_t> crash_at = cfg.crash_at;
  std::sort(crash_at.begin(), crash_at.end());
  size_t next_crash = 0;
  uint32_t rr_next = 0;
  std::vector<int> invariant_failures;

  auto crash_due = [&](uint64_t step) {
    if (next_crash < crash_at.size() && step >= crash_at[next_crash]) {
      next_crash++;
      return true;
    }
    if (cfg.crash_every != 0 && step > 0 && step % cfg.crash_every == 0) return true;
    if (cfg.crash_prob > 0.0 && sched_rng.chance(cfg.crash_prob)) return true;
    return false;
  };

  auto bump_since = [&](Pid scheduled) {
    for (Pid p = 0; p < cfg.procs; ++p) {
      const auto& pr = eng.rme().proc(p);
      if (p != scheduled && pr.pc != Pc::Rem) {
        since[p]++;
        if (since[p] > max_gap) max_gap = since[p];
      } else {
        since[p] = 0;
      }
    }
  };

  auto check_state = [&]() {
    if (!cfg.check_invariant) return;
    auto bad = eval_invariant(eng.invariant_view());
    for (int id : bad) {
      if (std::find(invariant_failures.begin(), invariant_failures.end(), id) ==
          invariant_failures.end()) {
        invariant_failures.push_back(id);
      }
    }
  };

  if (cfg.scheduler == SchedulerKind::Scripted) {
    for (const auto& entry : cfg.script) {
      if (entry.crash) {
        eng.inject_crash();
      } else {
        eng.register_process(entry.pid);
        if (entry.action) {
          eng.apply(entry.pid, *entry.action);
        } else {
          eng.step_process(entry.pid);
        }
      }
      check_state();
    }
  } else {
    while (eng.step_count() < cfg.max_steps) {
      if (crash_due(eng.step_count())) {
        eng.inject_crash();
        check_state();
        continue;
      }
      Pid pick = 0;
      if (cfg.scheduler == SchedulerKind::RoundRobin) {
        pick = rr_next;
        rr_next = (rr_next + 1) % cfg.procs;
      } else {
        // Fairness first: any starving non-remainder process takes priority.
        uint32_t worst = 0;
        Pid forced = kNoPid;
        for (Pid p = 0; p < cfg.procs; ++p) {
          if (since[p] + 1 >= bound && since[p] >= worst) {
            if (since[p] > worst || forced == kNoPid) forced = p;
            worst = since[p];
          }
        }
        pick = forced != kNoPid
                   ? forced
                   : static_cast<Pid>(sched_rng.below(cfg.procs));
      }
      eng.step_process(pick);
      bump_since(pick);
      check_state();
    }
  }

  // Drain: let every in-flight process finish (no new attempts, no crashes)
  // so the starvation verdict cannot be an artifact of the horizon.
  bool drained = true;
  if (cfg.drain) {
    uint64_t budget =
        std::max<uint64_t>(1000000, 64ull * bound * (cfg.procs + 1) * 64);
    auto unfinished = [&]() {
      for (Pid p = 0; p < cfg.procs; ++p) {
        const auto& pr = eng.rme().proc(p);
        if (pr.pc != Pc::Rem || pr.status != Status::Good) return true;
      }
      return false;
    };
    while (unfinished()) {
      if (budget-- == 0) {
        drained = false;
        break;
      }
      for (Pid p = 0; p < cfg.procs; ++p) {
        const auto& pr = eng.rme().proc(p);
        if (pr.pc != Pc::Rem || pr.status != Status::Good) {
          eng.step_process(p);
        }
      }
      check_state();
    }
  }

  RunOutcome out;
  out.trace = eng.sink().events();
  out.cell_names = eng.memory().cell_names();
  CheckConfig ccfg;
  ccfg.algo = cfg.algo;
  ccfg.limits = default_limits(cfg.algo);
  ccfg.fair = cfg.scheduler == SchedulerKind::RandomFair ||
              cfg.scheduler == SchedulerKind::RoundRobin;
  ccfg.drained = cfg.drain && drained;
  out.report.verdicts = check_run(out.trace, out.cell_names, ccfg);
  out.report.violations = eng.sink().violations().size();
  out.report.steps = eng.step_count();
  out.report.crashes = eng.crash_count();
  out.report.drained = drained;
  out.report.max_sched_gap = max_gap;
  out.report.invariant_failures = invariant_failures;
  if (cfg.drain && !drained) {
    // The drain phase is bounded generously; failing to finish is itself
    // starvation evidence.
    for (auto& v : out.report.verdicts) {
      if (v.id == PropertyId::STARVATION && v.pass) {
        v.pass = false;
        v.witness = "drain phase exhausted its budget with attempts still in flight";
      }
    }
  }
  for (Pid p = 0; p < cfg.procs; ++p) {
    const auto& st = eng.memory_mut().rmr_stats(p);
    out.report.max_passage_cc = std::max(out.report.max_passage_cc, st.max_passage_cc);
    out.report.max_passage_dsm = std::max(out.report.max_passage_dsm, st.max_passage_dsm);
  }
  for (const auto& v : out.report.verdicts) {
    if (v.id == PropertyId::STARVATION) out.report.max_try_window = v.stat;
  }
  return out;
}

}  // namespace rmelab
