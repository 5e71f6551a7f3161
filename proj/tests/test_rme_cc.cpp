#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "rmelab/engine.hpp"
#include "rmelab/invariant.hpp"
#include "rmelab/properties.hpp"
#include "rmelab/run.hpp"

using namespace rmelab;

namespace {

Engine make_engine(Algo algo, Pid procs, uint32_t dwell = 1) {
  EngineOptions opt;
  opt.algo = algo;
  opt.cs_dwell = dwell;
  opt.poison_crash = true;
  Engine eng(opt);
  for (Pid p = 0; p < procs; ++p) eng.register_process(p);
  return eng;
}

// Drives p with the default client action until the predicate holds.
template <typename Pred>
void drive_until(Engine& eng, Pid p, Pred pred, int guard = 256) {
  while (!pred()) {
    REQUIRE(guard-- > 0);
    REQUIRE(eng.step_process(p));
  }
}

void assert_clean(Engine& eng) {
  REQUIRE(eng.sink().violations().empty());
  REQUIRE(eval_invariant(eng.invariant_view()).empty());
}

// Longest crash-free paths through the exit and recover line graphs,
// independent of the step machines: plain depth-first search over the
// figures' control edges.
struct LineGraph {
  std::vector<std::vector<int>> succ;  // node 0 = entry, node n-1 = return
  int longest() const {
    std::vector<int> memo(succ.size(), -1);
    std::function<int(int)> go = [&](int u) -> int {
      if (succ[u].empty()) return 0;
      if (memo[u] >= 0) return memo[u];
      int best = 0;
      for (int v : succ[u]) best = std::max(best, 1 + go(v));
      return memo[u] = best;
    };
    return go(0);
  }
};

}  // namespace

TEST_CASE("cc single-process super-passage: 12 accesses, at most 12 cc rmrs") {
  RunConfig cfg;
  cfg.algo = Algo::CC;
  cfg.procs = 1;
  cfg.scheduler = SchedulerKind::RoundRobin;
  cfg.max_steps = 60;
  cfg.cs_dwell = 0;
  auto out = run(cfg);
  int accesses = 0;
  uint64_t rmrs = 0;
  bool in_sp = false, measured = false;
  for (const auto& ev : out.trace) {
    if (ev.kind == EvKind::SectionEnter && ev.section == Section::Try && !measured) {
      in_sp = true;
    } else if (ev.kind == EvKind::Access && in_sp) {
      accesses++;
      rmrs += ev.rmr_cc ? 1 : 0;
    } else if (ev.kind == EvKind::SectionReturn && ev.section == Section::Exit && in_sp) {
      in_sp = false;
      measured = true;
    }
  }
  REQUIRE(measured);
  REQUIRE(accesses == 12);
  REQUIRE(rmrs == 8);
  REQUIRE(rmrs <= 12);
  REQUIRE(out.report.ok());
}

TEST_CASE("crash in the cs: recover reenters before anyone else (csr)") {
  Engine eng = make_engine(Algo::CC, 2);
  eng.apply(0, ProcAction::InvokeTry);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::CS; });
  // a competitor parks in the queue
  eng.apply(1, ProcAction::InvokeTry);
  for (int i = 0; i < 8; ++i) eng.apply(1, ProcAction::Step);
  eng.inject_crash();
  REQUIRE(eng.rme().proc(0).status == Status::RecoverFromCs);
  REQUIRE(eng.csr_owner() == std::optional<Pid>(0));
  // the crashed owner recovers straight back into the cs
  eng.apply(0, ProcAction::InvokeRecover);
  int own_steps = 0;
  while (eng.rme().proc(0).pc != Pc::CS) {
    eng.apply(0, ProcAction::Step);
    own_steps++;
    REQUIRE(own_steps < 16);
  }
  REQUIRE(eng.rme().proc(0).status == Status::Good);
  REQUIRE_FALSE(eng.csr_violated());
  assert_clean(eng);
}

TEST_CASE("a fresh joiner stuck on the dead lock migrates when the stop flag fires") {
  // p crashes mid-queue; q reads the old sequence, enqueues behind the
  // wreckage, and is released by the stop flag p raises while recovering.
  Engine eng = make_engine(Algo::CC, 2);
  eng.apply(0, ProcAction::InvokeTry);
  // p holds the base lock and waits at the barrier line when the crash hits
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::T6; });
  eng.inject_crash();
  // q joins before the recovery bumps the sequence
  eng.apply(1, ProcAction::InvokeTry);
  for (int i = 0; i < 8; ++i) eng.apply(1, ProcAction::Step);
  REQUIRE(eng.rme().proc(1).pc == Pc::T3);
  REQUIRE(eng.rme().proc(1).s == 1);
  // p recovers: resets the spare lock, bumps Seq, raises Stop[1%3]
  eng.apply(0, ProcAction::InvokeRecover);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::Rem; });
  REQUIRE(eng.rme().seq_value(eng.memory()) == 2);
  REQUIRE(eng.rme().stop_state(eng.memory(), 1));
  // q notices, migrates via T9/T10, and completes on the new lock
  drive_until(eng, 1, [&] { return eng.rme().proc(1).pc == Pc::CS; }, 64);
  REQUIRE(eng.rme().proc(1).s == 2);
  REQUIRE_FALSE(eng.csr_violated());
  assert_clean(eng);
}

TEST_CASE("crash status bookkeeping follows the crash rules") {
  Engine eng = make_engine(Algo::CC, 1);
  eng.apply(0, ProcAction::InvokeTry);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::T6; });
  eng.inject_crash();
  REQUIRE(eng.rme().proc(0).status == Status::RecoverFromTry);
  REQUIRE(eng.rme().proc(0).active);  // nvm local survives
  // a second crash in the remainder leaves a non-good status unchanged
  eng.inject_crash();
  REQUIRE(eng.rme().proc(0).status == Status::RecoverFromTry);
}

TEST_CASE("recover with good status returns to the remainder quickly") {
  Engine eng = make_engine(Algo::CC, 1);
  eng.apply(0, ProcAction::InvokeRecover);
  int steps = 0;
  while (eng.rme().proc(0).pc != Pc::Rem) {
    eng.apply(0, ProcAction::Step);
    steps++;
    REQUIRE(steps < 8);
  }
  REQUIRE(steps <= 4);
  assert_clean(eng);
}

TEST_CASE("longest crash-free exit and recover paths match the frozen constants") {
  // exit: E1 -> (E2 | E3), E2 -> E3, E3 -> E4, E4 -> return
  LineGraph exit_cc;
  exit_cc.succ = {{1}, {2, 3}, {3}, {4}, {5}, {}};
  // nodes: 0 entry, 1=E1, 2=E2, 3=E3, 4=E4, 5 return
  REQUIRE(exit_cc.longest() - 1 <= static_cast<int>(kExitLinesCc));
  REQUIRE(exit_cc.longest() - 1 == 4);

  // recover: R1 -> (R2 | R6), R2..R5 chain, R5 -> R6, R6 -> (R7 | return),
  // R7 -> R8, R8 -> return
  LineGraph rec_cc;
  // 0 entry, 1=R1, 2=R2, 3=R3, 4=R4, 5=R5, 6=R6, 7=R7, 8=R8, 9 return
  rec_cc.succ = {{1}, {2, 6}, {3}, {4}, {5}, {6}, {7, 9}, {8}, {9}, {}};
  REQUIRE(rec_cc.longest() - 1 == static_cast<int>(kRecoverLinesCc));

  // the machine's observed spans stay under the same constants
  RunConfig cfg;
  cfg.algo = Algo::CC;
  cfg.procs = 8;
  cfg.max_steps = 60000;
  cfg.crash_every = 3000;
  cfg.record_trace = false;
  auto out = run(cfg);
  for (const auto& v : out.report.verdicts) {
    if (v.id == PropertyId::BOUNDED_EXIT) {
      REQUIRE(v.pass);
      REQUIRE(v.stat <= kExitLinesCc);
    }
    if (v.id == PropertyId::BOUNDED_RECOVERY) {
      REQUIRE(v.pass);
      REQUIRE(v.stat == kRecoverLinesCc);  // the full install path occurs
    }
  }
}

TEST_CASE("seq moves by at most one between crashes") {
  RunConfig cfg;
  cfg.algo = Algo::CC;
  cfg.procs = 4;
  cfg.max_steps = 40000;
  cfg.crash_every = 2500;
  auto out = run(cfg);
  for (const auto& v : out.report.verdicts) {
    if (v.id == PropertyId::SEQ_MONOTONE) REQUIRE(v.pass);
  }
  REQUIRE(out.report.ok());
}

TEST_CASE("protocol violations are reported, not executed") {
  Engine eng = make_engine(Algo::CC, 1);
  eng.apply(0, ProcAction::InvokeExit);  // not in the cs
  REQUIRE(eng.sink().violations().size() == 1);
  REQUIRE(eng.rme().proc(0).pc == Pc::Rem);
  // crashed processes must not start a fresh attempt
  eng.apply(0, ProcAction::InvokeTry);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::T6; });
  eng.inject_crash();
  eng.apply(0, ProcAction::InvokeTry);
  REQUIRE(eng.sink().violations().size() == 2);
  REQUIRE(eng.rme().proc(0).pc == Pc::Rem);
}
