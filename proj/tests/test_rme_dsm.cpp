#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <map>
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

template <typename Pred>
void drive_until(Engine& eng, Pid p, Pred pred, int guard = 512) {
  while (!pred()) {
    REQUIRE(guard-- > 0);
    REQUIRE(eng.step_process(p));
  }
}

}  // namespace

TEST_CASE("single process: same control path as the cc variant, bounded dsm rmrs") {
  // compare the per-line label sequences of one crash-free super-passage
  auto lines = [](Algo algo) {
    RunConfig cfg;
    cfg.algo = algo;
    cfg.procs = 1;
    cfg.scheduler = SchedulerKind::RoundRobin;
    cfg.max_steps = 120;
    cfg.cs_dwell = 0;
    auto out = run(cfg);
    std::vector<std::string> seq;
    for (const auto& ev : out.trace) {
      if (ev.kind == EvKind::SectionReturn && ev.section == Section::Exit) break;
      if (ev.kind == EvKind::Access &&
          (seq.empty() || seq.back() != ev.pc_from)) {
        seq.push_back(ev.pc_from);
      }
    }
    return seq;
  };
  REQUIRE(lines(Algo::CC) == lines(Algo::DSM));

  RunConfig cfg;
  cfg.algo = Algo::DSM;
  cfg.procs = 1;
  cfg.max_steps = 4000;
  cfg.record_trace = false;
  auto out = run(cfg);
  REQUIRE(out.report.ok());
  REQUIRE(out.report.max_passage_dsm <= kPassageRmrDsmAlgoDsm);
}

TEST_CASE("migration scenario: the recovering crasher's abandon frees the stranded joiner") {
  Engine eng = make_engine(Algo::DSM, 2);
  // p wins the base lock and waits; the system dies
  eng.apply(0, ProcAction::InvokeTry);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::T6; });
  eng.inject_crash();
  // q, clueless, reads the dead sequence and queues behind p's wreck
  eng.apply(1, ProcAction::InvokeTry);
  for (int i = 0; i < 12; ++i) eng.apply(1, ProcAction::Step);
  REQUIRE(eng.rme().proc(1).pc == Pc::T3);
  REQUIRE(eng.rme().proc(1).s == 1);
  // p recovers: installs the next lock and abandons the old one (r5.1)
  eng.apply(0, ProcAction::InvokeRecover);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::Rem; });
  REQUIRE(eng.rme().seq_value(eng.memory()) == 2);
  REQUIRE(eng.rme().lock(1).ghost().crash_set.empty());
  // the release property frees q; it migrates through 8.1 and completes
  drive_until(eng, 1, [&] { return eng.rme().proc(1).pc == Pc::CS; }, 128);
  REQUIRE(eng.rme().proc(1).s == 2);
  REQUIRE(eng.sink().violations().empty());
  REQUIRE(eval_invariant(eng.invariant_view()).empty());
  // the migrating joiner abandoned the dead lock on its way out
  REQUIRE(eng.rme().lock(1).ghost().live_empty());
}

TEST_CASE("crash in the cs: csr via the capturable read, then a clean double abandon") {
  Engine eng = make_engine(Algo::DSM, 1);
  eng.apply(0, ProcAction::InvokeTry);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::CS; });
  eng.inject_crash();
  REQUIRE(eng.rme().proc(0).status == Status::RecoverFromCs);
  eng.apply(0, ProcAction::InvokeRecover);
  drive_until(eng, 0, [&] { return eng.rme().proc(0).pc == Pc::CS; });
  REQUIRE_FALSE(eng.csr_violated());
  REQUIRE(eng.rme().proc(0).status == Status::Good);
  // the exit goes through e2.1 (s = x-1) onto a node that already carries
  // the token from the recovery's r5.1 abandon
  eng.apply(0, ProcAction::Dwell);
  eng.apply(0, ProcAction::InvokeExit);
  int steps = 0;
  while (eng.rme().proc(0).pc != Pc::Rem) {
    eng.apply(0, ProcAction::Step);
    REQUIRE(++steps < 64);
  }
  REQUIRE(eng.sink().violations().empty());
  REQUIRE(eval_invariant(eng.invariant_view()).empty());
  for (int i = 0; i < 3; ++i) REQUIRE(eng.rme().lock(i).ghost().all_empty());
}

TEST_CASE("every spin in the dsm stack targets a cell the spinner owns") {
  // run a contended crashy workload and check every repeated-read access
  RunConfig cfg;
  cfg.algo = Algo::DSM;
  cfg.procs = 3;
  cfg.max_steps = 30000;
  cfg.crash_every = 4000;
  cfg.seed = 5;
  auto out = run(cfg);
  REQUIRE(out.report.ok());
  // a spin iteration = consecutive reads of the same cell by one process at
  // one line; its target must live in the spinner's partition
  struct LastAccess {
    CellId cell = kNoCell;
    MemOpKind op = MemOpKind::Write;
    std::string pc;
  };
  std::map<Pid, LastAccess> last;
  size_t spin_reads = 0;
  for (const auto& ev : out.trace) {
    if (ev.kind != EvKind::Access) continue;
    auto it = last.find(ev.pid);
    if (it != last.end() && it->second.cell == ev.cell &&
        it->second.op == MemOpKind::Read && ev.op == MemOpKind::Read &&
        it->second.pc == ev.pc_from) {
      spin_reads++;
      REQUIRE_FALSE(ev.rmr_dsm);
    }
    last[ev.pid] = {ev.cell, ev.op, ev.pc_from};
  }
  REQUIRE(spin_reads > 0);
}

TEST_CASE("dsm longest crash-free paths fit the frozen constants") {
  // exit: E1 -> (E2 | E2.1 | E3), E2/E2.1 -> E3 -> E4 -> return
  // nodes: 0 entry, 1=E1, 2=E2, 3=E2.1, 4=E3, 5=E4, 6 return
  std::vector<std::vector<int>> exit_succ = {{1}, {2, 3, 4}, {4}, {4}, {5}, {6}, {}};
  // recover: R1 -> (R2 | R5.1), chain R2..R5 -> R5.1 -> R6 -> (R7 | return)
  // nodes: 0 entry, 1=R1, 2=R2, 3=R3, 4=R4, 5=R5, 6=R5.1, 7=R6, 8=R7, 9=R8, 10 return
  std::vector<std::vector<int>> rec_succ = {{1}, {2, 6}, {3},  {4}, {5}, {6},
                                            {7}, {8, 10}, {9}, {10}, {}};
  std::function<int(const std::vector<std::vector<int>>&, int)> longest =
      [&](const std::vector<std::vector<int>>& g, int u) -> int {
    int best = 0;
    for (int v : g[u]) best = std::max(best, 1 + longest(g, v));
    return best;
  };
  REQUIRE(longest(exit_succ, 0) - 1 == 4);
  REQUIRE(longest(exit_succ, 0) - 1 <= static_cast<int>(kExitLinesDsm));
  REQUIRE(longest(rec_succ, 0) - 1 == 9);
  REQUIRE(longest(rec_succ, 0) - 1 <= static_cast<int>(kRecoverLinesDsm));

  RunConfig cfg;
  cfg.algo = Algo::DSM;
  cfg.procs = 8;
  cfg.max_steps = 60000;
  cfg.crash_every = 3000;
  cfg.record_trace = false;
  auto out = run(cfg);
  for (const auto& v : out.report.verdicts) {
    if (v.id == PropertyId::BOUNDED_EXIT) REQUIRE(v.pass);
    if (v.id == PropertyId::BOUNDED_RECOVERY) {
      REQUIRE(v.pass);
      REQUIRE(v.stat == 9);  // the full install-plus-abandon path occurs
    }
  }
}

TEST_CASE("registration allocates the joiner's go cells in its own partition") {
  EngineOptions opt;
  opt.algo = Algo::DSM;
  Engine eng(opt);
  size_t before = eng.memory().cell_count();
  eng.register_process(7);
  size_t after = eng.memory().cell_count();
  REQUIRE(after > before);
  bool found_owned = false;
  for (CellId c = static_cast<CellId>(before); c < after; ++c) {
    if (eng.memory().cell(c).owner == 7) found_owned = true;
  }
  REQUIRE(found_owned);
}
