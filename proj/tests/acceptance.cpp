// Acceptance suite: one test case per criterion, one pass/fail line each.
// Everything here runs at the parameters fixed below; the RMR ceilings and
// line-span constants come frozen from properties.hpp.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "rmelab/explore.hpp"
#include "rmelab/lin_check.hpp"
#include "rmelab/properties.hpp"
#include "rmelab/run.hpp"
#include "rmelab/trace_io.hpp"

using namespace rmelab;

namespace {

struct Tally {
  int num;
  const char* what;
  bool pass = true;
  std::string note;

  ~Tally() {
    std::printf("[criterion %d] %s — %s%s%s\n", num, pass ? "PASS" : "FAIL",
                what, note.empty() ? "" : ": ", note.c_str());
    std::fflush(stdout);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
             .count() /
         1000.0;
}

RunConfig explore_config(Algo algo, uint32_t crashes, Mutation m = Mutation::None) {
  RunConfig cfg;
  cfg.algo = algo;
  cfg.mutation = m;
  cfg.procs = 2;
  cfg.crash_budget = crashes;
  cfg.sp_cap = 2;
  cfg.cs_dwell = 1;
  cfg.state_cap = 80000000;
  cfg.allow_good_recover = true;
  return cfg;
}

}  // namespace

TEST_CASE("criterion 1: exhaustive safety, cc algorithm") {
  Tally t{1, "cc exhaustive: n=2, K in {0,1}, 2 super-passages, no violations"};
  auto t0 = std::chrono::steady_clock::now();
  uint64_t total_states = 0;
  for (uint32_t k : {0u, 1u}) {
    auto rep = explore(explore_config(Algo::CC, k));
    total_states += rep.states;
    t.pass = t.pass && rep.complete && rep.violations.empty();
    if (!rep.violations.empty()) t.note = rep.violations[0].what;
    CHECK(rep.complete);
    CHECK(rep.violations.empty());
    CHECK(rep.invariant_failures.empty());
    CHECK(rep.states < 10000000);
  }
  t.note = "states=" + std::to_string(total_states) +
           " time=" + std::to_string(seconds_since(t0)) + "s";
  REQUIRE(t.pass);
}

TEST_CASE("criterion 2: exhaustive safety, dsm algorithm") {
  Tally t{2, "dsm exhaustive: n=2, K in {0,1}, plus single-waiter discipline"};
  auto t0 = std::chrono::steady_clock::now();
  uint64_t total_states = 0;
  for (uint32_t k : {0u, 1u}) {
    auto rep = explore(explore_config(Algo::DSM, k));
    total_states += rep.states;
    t.pass = t.pass && rep.complete && rep.violations.empty();
    if (!rep.violations.empty()) t.note = rep.violations[0].what;
    CHECK(rep.complete);
    CHECK(rep.violations.empty());
  }
  t.note = "states=" + std::to_string(total_states) +
           " time=" + std::to_string(seconds_since(t0)) + "s";
  REQUIRE(t.pass);
}

TEST_CASE("criterion 3: invariant sensitivity to the four mutants") {
  Tally t{3, "each single-line mutant is caught by exploration at n=2, K<=1"};
  struct MutantRun {
    Algo algo;
    Mutation m;
  };
  std::vector<MutantRun> mutants = {
      {Algo::CC, Mutation::DropR5},
      {Algo::CC, Mutation::DropE3},
      {Algo::CC, Mutation::SwapR3R4},
      {Algo::DSM, Mutation::SkipAbandon8_1},
  };
  for (const auto& mr : mutants) {
    auto rep = explore(explore_config(mr.algo, 1, mr.m));
    INFO(to_string(mr.algo) << "/" << to_string(mr.m));
    CHECK_FALSE(rep.violations.empty());
    if (rep.violations.empty()) {
      t.pass = false;
      t.note += std::string(to_string(mr.m)) + " uncaught; ";
    } else {
      t.note += std::string(to_string(mr.m)) + "->caught ";
    }
  }
  REQUIRE(t.pass);
}

TEST_CASE("criterion 4: bounded exit and bounded recovery over a million fair steps") {
  Tally t{4, "crash-free exit/recover spans within 5/8 (cc) and 8/10 (dsm) lines"};
  for (Algo algo : {Algo::CC, Algo::DSM}) {
    RunConfig cfg;
    cfg.algo = algo;
    cfg.procs = 16;
    cfg.max_steps = 1000000;
    cfg.crash_every = 20000;
    cfg.seed = 4242;
    cfg.record_trace = false;
    auto out = run(cfg);
    CheckLimits lim = default_limits(algo);
    for (const auto& v : out.report.verdicts) {
      if (v.id == PropertyId::BOUNDED_EXIT) {
        CHECK(v.pass);
        t.pass = t.pass && v.pass;
        t.note += std::string(to_string(algo)) + " exit<=" + std::to_string(v.stat) +
                  "/" + std::to_string(lim.exit_lines) + " ";
      }
      if (v.id == PropertyId::BOUNDED_RECOVERY) {
        CHECK(v.pass);
        t.pass = t.pass && v.pass;
        t.note += std::string(to_string(algo)) + " rec<=" + std::to_string(v.stat) +
                  "/" + std::to_string(lim.recover_lines) + " ";
      }
    }
    CHECK(out.report.ok());
    t.pass = t.pass && out.report.ok();
  }
  REQUIRE(t.pass);
}

TEST_CASE("criterion 5: one n-independent rmr ceiling per passage") {
  Tally t{5, "per-passage rmr maxima bounded by one constant across n in {4,16,64}"};
  for (Algo algo : {Algo::CC, Algo::DSM}) {
    CheckLimits lim = default_limits(algo);
    std::map<uint32_t, std::pair<uint64_t, uint64_t>> by_n;
    for (uint32_t n : {4u, 16u, 64u}) {
      uint64_t max_cc = 0, max_dsm = 0;
      for (int s = 1; s <= 16; ++s) {
        RunConfig cfg;
        cfg.algo = algo;
        cfg.procs = n;
        cfg.max_steps = 100000;
        cfg.crash_every = 5000;
        cfg.seed = static_cast<uint64_t>(s) * 7919;
        cfg.record_trace = false;
        auto out = run(cfg);
        // rmr_bound is part of the verdicts: every passage fits the ceiling
        for (const auto& v : out.report.verdicts) {
          if (v.id == PropertyId::RMR_BOUND) {
            CHECK(v.pass);
            t.pass = t.pass && v.pass;
          }
        }
        max_cc = std::max(max_cc, out.report.max_passage_cc);
        max_dsm = std::max(max_dsm, out.report.max_passage_dsm);
      }
      by_n[n] = {max_cc, max_dsm};
      CHECK(max_cc <= lim.passage_cc);
      t.pass = t.pass && max_cc <= lim.passage_cc;
      if (algo == Algo::DSM) {
        CHECK(max_dsm <= lim.passage_dsm);
        t.pass = t.pass && max_dsm <= lim.passage_dsm;
      }
      t.note += std::string(to_string(algo)) + " n" + std::to_string(n) + ":cc=" +
                std::to_string(max_cc);
      if (algo == Algo::DSM) t.note += ",dsm=" + std::to_string(max_dsm);
      t.note += " ";
    }
  }
  REQUIRE(t.pass);
}

TEST_CASE("criterion 6: starvation freedom with a stable completion window") {
  Tally t{6, "after the last crash every try completes; windows do not grow with run length"};
  std::map<uint64_t, uint64_t> window_by_len;
  for (uint64_t len : {100000ull, 200000ull, 400000ull}) {
    uint64_t wmax = 0;
    for (int s = 1; s <= 8; ++s) {
      RunConfig cfg;
      cfg.algo = Algo::CC;
      cfg.procs = 8;
      cfg.fairness_bound = 4 * cfg.procs;
      cfg.max_steps = len;
      cfg.crash_every = 10000;
      cfg.seed = static_cast<uint64_t>(s) * 101;
      cfg.record_trace = false;
      auto out = run(cfg);
      CHECK(out.report.drained);
      for (const auto& v : out.report.verdicts) {
        if (v.id == PropertyId::STARVATION) {
          CHECK(v.pass);
          t.pass = t.pass && v.pass;
        }
      }
      wmax = std::max(wmax, out.report.max_try_window);
    }
    window_by_len[len] = wmax;
    t.note += "L=" + std::to_string(len) + ":w=" + std::to_string(wmax) + " ";
  }
  // the max window must plateau, not track the horizon
  CHECK(window_by_len[200000] <= 2 * window_by_len[100000]);
  CHECK(window_by_len[400000] <= 2 * window_by_len[100000]);
  t.pass = t.pass && window_by_len[200000] <= 2 * window_by_len[100000] &&
           window_by_len[400000] <= 2 * window_by_len[100000];
  REQUIRE(t.pass);
}

namespace {

// Exhaustive object histories: every interleaving of up to four operations
// per process with crashes at every cut point, checked incrementally by the
// strict-linearizability monitor (one stuck point = one REQUIRE failure).
// States merge on (concrete object state, monitor state, budgets); op ids
// are the process indices, so at most one pending op per id.
struct ObjExplorer {
  bool capturable;
  uint64_t states = 0, edges = 0, leaves = 0, samples = 0;
  bool ok = true;
  std::string diag;

  struct Node {
    Memory mem;
    Capturable cap{"C"};
    BoolSignal sig{"S"};
    LinMonitor mon;
    int pending[2] = {-1, -1};  // method menu index, -1 = idle
    int ops_left[2] = {4, 4};
    int crashes_left = 2;

    explicit Node(bool capturable)
        : mon(capturable ? LinObjKind::Capturable : LinObjKind::Signal,
              capturable ? Value::bot() : Value::boolean(false)) {}
  };

  // menu: capturable {read, write, capture, release, wait(slot=p)},
  // signal {set, reset, wait}
  static constexpr int kCapMenu = 5;
  static constexpr int kSigMenu = 3;

  char code_of(int menu, Pid p) const {
    if (capturable) {
      constexpr char codes[kCapMenu] = {'r', 'w', 'c', 'R', 'W'};
      (void)p;
      return codes[menu];
    }
    constexpr char codes[kSigMenu] = {'s', 'z', 'Y'};
    return codes[menu];
  }

  void invoke(Node& n, Pid p, int menu) {
    if (capturable) {
      constexpr CapMethod methods[kCapMenu] = {CapMethod::Read, CapMethod::Write,
                                               CapMethod::Capture, CapMethod::Release,
                                               CapMethod::Wait};
      n.cap.invoke(n.mem, p, methods[menu], static_cast<int>(p));
    } else {
      constexpr SigMethod methods[kSigMenu] = {SigMethod::Set, SigMethod::Reset,
                                               SigMethod::Wait};
      n.sig.invoke(n.mem, p, methods[menu]);
    }
    n.mon.invoke(static_cast<int>(p), {code_of(menu, p), p});
    n.pending[p] = menu;
    n.ops_left[p]--;
  }

  // returns false if the monitor rejected a completed operation
  bool step(Node& n, Pid p) {
    AccessInfo info;
    MethodStatus st = capturable ? n.cap.step(n.mem, p, &info)
                                 : n.sig.step(n.mem, p, &info);
    if (st.outcome != StepOutcome::Done) return true;
    std::optional<Value> result;
    char code = code_of(n.pending[p], p);
    if (code == 'r' || code == 'c') result = st.result;
    n.pending[p] = -1;
    return n.mon.on_return(static_cast<int>(p), result);
  }

  void crash(Node& n) {
    n.mon.on_crash();
    n.cap.on_system_crash(nullptr);
    n.sig.on_system_crash(nullptr);
    n.mem.system_crash(nullptr);
    n.pending[0] = n.pending[1] = -1;
    n.crashes_left--;
  }

  Hash128 fingerprint(const Node& n) const {
    Hash128 h;
    n.mem.hash_cells(h);
    if (capturable) {
      n.cap.hash(h);
    } else {
      n.sig.hash(h);
    }
    h.mix((uint64_t)(n.pending[0] + 1) | ((uint64_t)(n.pending[1] + 1) << 8) |
          ((uint64_t)n.ops_left[0] << 16) | ((uint64_t)n.ops_left[1] << 24) |
          ((uint64_t)n.crashes_left << 32));
    n.mon.hash(h);
    return h;
  }

  void run() {
    std::unordered_set<Hash128, Hash128Hasher> visited;
    std::vector<Node> stack;
    Node root(capturable);
    visited.insert(fingerprint(root));
    states = 1;
    // frames carry (node, next-choice); choices are encoded as ints:
    // 0..1 step p; 2 crash; 3+ invoke (p * menu + m)
    struct Frame {
      Node node;
      int next = 0;
      explicit Frame(Node n) : node(std::move(n)) {}
    };
    std::vector<Frame> dfs;
    dfs.emplace_back(root);
    const int menu = capturable ? kCapMenu : kSigMenu;
    const int kChoices = 3 + 2 * menu;
    while (!dfs.empty() && ok) {
      Frame& top = dfs.back();
      if (top.next >= kChoices) {
        bool is_leaf = true;
        for (Pid p = 0; p < 2; ++p) {
          if (top.node.pending[p] != -1 || top.node.ops_left[p] > 0) is_leaf = false;
        }
        if (is_leaf) leaves++;
        dfs.pop_back();
        continue;
      }
      int choice = top.next++;
      Node child = top.node;
      if (choice < 2) {
        Pid p = static_cast<Pid>(choice);
        if (child.pending[p] == -1) continue;
        if (!step(child, p)) {
          ok = false;
          diag = "monitor rejected a completed operation";
          break;
        }
      } else if (choice == 2) {
        if (child.crashes_left == 0) continue;
        bool anything = child.pending[0] != -1 || child.pending[1] != -1 ||
                        child.ops_left[0] > 0 || child.ops_left[1] > 0;
        if (!anything) continue;
        crash(child);
      } else {
        int idx = choice - 3;
        Pid p = static_cast<Pid>(idx / menu);
        int m = idx % menu;
        if (child.pending[p] != -1 || child.ops_left[p] == 0) continue;
        if (!capturable && m == 2 && child.pending[1 - p] != -1 &&
            code_of(child.pending[1 - p], static_cast<Pid>(1 - p)) == 'Y') {
          continue;  // single-waiter obligation on the signal
        }
        invoke(child, p, m);
      }
      edges++;
      if (!child.mon.feasible()) {
        ok = false;
        diag = "monitor emptied";
        break;
      }
      if (!visited.insert(fingerprint(child)).second) continue;
      states++;
      dfs.emplace_back(std::move(child));
    }
  }
};

}  // namespace

TEST_CASE("criterion 7: wait objects are strictly linearizable on exhaustive histories") {
  Tally t{7, "all histories of <= 8 ops, 2 procs, crashes at every cut, both objects"};
  auto t0 = std::chrono::steady_clock::now();
  for (bool capturable : {true, false}) {
    ObjExplorer ex;
    ex.capturable = capturable;
    ex.run();
    INFO((capturable ? "capturable" : "signal"));
    CHECK(ex.ok);
    t.pass = t.pass && ex.ok;
    t.note += std::string(capturable ? "capturable" : "signal") + ":states=" +
              std::to_string(ex.states) + " ";
    if (!ex.ok) t.note += ex.diag + " ";
  }
  t.note += "time=" + std::to_string(seconds_since(t0)) + "s";
  REQUIRE(t.pass);
}

TEST_CASE("criterion 8: the release property on the dsm base lock") {
  Tally t{8, "crashed users abandoning free every fresh waiter (|CrashSet| in {1,2})"};
  for (int crashed = 1; crashed <= 2; ++crashed) {
    Memory mem;
    BaseLock lock(LockFlavor::DSM, "L");
    lock.init_shared(mem);
    AccessInfo info;
    for (Pid p = 0; p < static_cast<Pid>(crashed); ++p) {
      lock.invoke(mem, p, BlMethod::Try);
      lock.step(mem, p, &info);
      lock.step(mem, p, &info);  // linked into the queue, then the crash
    }
    lock.on_system_crash(nullptr);
    std::vector<Pid> fresh = {10, 11};
    for (Pid r : fresh) {
      lock.invoke(mem, r, BlMethod::Try);
      for (int i = 0; i < 8; ++i) lock.step(mem, r, &info);
    }
    for (Pid p = 0; p < static_cast<Pid>(crashed); ++p) {
      lock.invoke(mem, p, BlMethod::Abandon);
      while (lock.step(mem, p, &info) != StepOutcome::Done) {
      }
    }
    int done = 0;
    for (Pid r : fresh) {
      bool completed = false;
      for (int i = 0; i < 64 && !completed; ++i) {
        completed = lock.step(mem, r, &info) == StepOutcome::Done;
      }
      CHECK(completed);
      if (completed) done++;
      // each completer exits so the next waiter advances
      lock.invoke(mem, r, BlMethod::Exit);
      while (lock.step(mem, r, &info) != StepOutcome::Done) {
      }
    }
    t.pass = t.pass && done == 2;
    t.note += "crashset=" + std::to_string(crashed) + ":freed=" +
              std::to_string(done) + " ";
  }
  REQUIRE(t.pass);
}

TEST_CASE("criterion 9: determinism and trace round-trip") {
  Tally t{9, "same config+seed gives identical bytes; re-checked trace matches"};
  RunConfig cfg;
  cfg.algo = Algo::DSM;
  cfg.procs = 8;
  cfg.max_steps = 50000;
  cfg.seed = 7;
  cfg.crash_at = {1000, 9000};
  auto a = run(cfg);
  auto b = run(cfg);
  std::ostringstream sa, sb;
  export_trace(sa, a.trace, a.cell_names);
  export_trace(sb, b.trace, b.cell_names);
  bool identical = sa.str() == sb.str() && !sa.str().empty();
  CHECK(identical);
  t.pass = t.pass && identical;
  t.note += "bytes=" + std::to_string(sa.str().size()) + " ";

  std::istringstream is(sa.str());
  Trace back;
  std::vector<std::string> names;
  std::string err;
  bool imported = import_trace(is, &back, &names, &err);
  CHECK(imported);
  t.pass = t.pass && imported;
  if (imported) {
    CheckConfig ccfg;
    ccfg.algo = cfg.algo;
    ccfg.limits = default_limits(cfg.algo);
    ccfg.fair = true;
    ccfg.drained = a.report.drained;
    auto direct = check_run(a.trace, a.cell_names, ccfg);
    auto redone = check_run(back, names, ccfg);
    bool same = direct.size() == redone.size();
    for (size_t i = 0; same && i < direct.size(); ++i) {
      same = direct[i].id == redone[i].id && direct[i].pass == redone[i].pass &&
             direct[i].stat == redone[i].stat;
    }
    CHECK(same);
    t.pass = t.pass && same;
    t.note += "verdicts=match";
  }
  REQUIRE(t.pass);
}
