#pragma once

#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "rmelab/config.hpp"
#include "rmelab/engine.hpp"
#include "rmelab/invariant.hpp"

namespace rmelab {

struct ExploreViolation {
  std::string what;
  std::vector<std::string> schedule;  // replayable action path from the root
};

struct ExploreReport {
  uint64_t states = 0;
  uint64_t edges = 0;
  uint64_t quiescent_states = 0;
  bool complete = false;
  std::vector<ExploreViolation> violations;
  std::map<int, uint64_t> invariant_failures;  // condition id -> count

  bool ok() const { return complete && violations.empty(); }
};

namespace detail {

struct Choice {
  bool crash = false;
  Pid pid = 0;
  ProcAction action = ProcAction::Step;

  std::string str() const {
    if (crash) return "crash";
    return "p" + std::to_string(pid) + ":" + to_string(action);
  }
};

inline void enumerate_choices(const Engine& eng, uint32_t budget_left,
                              std::vector<Choice>* out) {
  out->clear();
  std::vector<ProcAction> acts;
  for (Pid p = 0; p < eng.process_count(); ++p) {
    eng.enabled_actions(p, &acts);
    for (ProcAction a : acts) out->push_back({false, p, a});
  }
  if (budget_left > 0 && !out->empty()) out->push_back({true, 0, ProcAction::Step});
}

}  // namespace detail

// Depth-first enumeration of every interleaving and crash placement within
// the budgets, with visited-state pruning over a canonical fingerprint.
// Every reached configuration is invariant-checked; mutual exclusion and CSR
// are asserted on every edge. Quiescent states (everyone parked after its
// super-passage budget) additionally require clean base-lock ghost sets on
// the DSM variant — every user of a base lock must have exited or abandoned
// it by then.
inline ExploreReport explore(const RunConfig& cfg, bool stop_at_first = true) {
  ExploreReport rep;

  EngineOptions opt;
  opt.algo = cfg.algo;
  opt.mutation = cfg.mutation;
  opt.cs_dwell = cfg.cs_dwell;
  opt.record_trace = false;
  opt.poison_crash = true;
  opt.sp_cap = cfg.sp_cap;
  opt.allow_good_recover = cfg.allow_good_recover;
  Engine root(opt);
  for (Pid p = 0; p < cfg.procs; ++p) root.register_process(p);

  struct Frame {
    Engine eng;
    uint32_t budget = 0;
    std::vector<detail::Choice> choices;
    size_t next = 0;
    std::string taken;  // choice that produced this frame

    explicit Frame(Engine e) : eng(std::move(e)) {}
  };

  std::unordered_set<Hash128, Hash128Hasher> visited;
  std::vector<Frame> stack;

  auto fingerprint = [](const Engine& e, uint32_t budget) {
    Hash128 h = e.fingerprint();
    h.mix(budget);
    return h;
  };

  auto record_violation = [&](const std::string& what, const std::string& last) {
    ExploreViolation v;
    v.what = what;
    for (const auto& f : stack) {
      if (!f.taken.empty()) v.schedule.push_back(f.taken);
    }
    if (!last.empty()) v.schedule.push_back(last);
    rep.violations.push_back(std::move(v));
  };

  auto check_state = [&](const Engine& eng, const std::string& taken) -> bool {
    bool bad = false;
    auto view = eng.invariant_view();
    auto failed = eval_invariant(view);
    for (int id : failed) {
      rep.invariant_failures[id]++;
      record_violation(std::string("invariant ") + invariant_condition_text(id),
                       taken);
      bad = true;
    }
    if (eng.procs_in_cs() > 1) {
      record_violation("MUTEX: two processes in the CS", taken);
      bad = true;
    }
    if (eng.csr_violated()) {
      record_violation("CSR violated", taken);
      bad = true;
    }
    if (eng.mirror_violated()) {
      record_violation("object state mirror diverged", taken);
      bad = true;
    }
    if (!eng.sink().violations().empty()) {
      for (const auto& v : eng.sink().violations()) {
        record_violation(std::string(to_string(v.code)) + ": " + v.detail, taken);
        bad = true;
      }
    }
    if (eng.quiescent()) {
      rep.quiescent_states++;
      if (cfg.algo == Algo::DSM && cfg.check_quiescent_ghosts) {
        for (int i = 0; i < 3; ++i) {
          if (!eng.rme().lock(i).ghost().all_empty()) {
            record_violation("LOCK_SET_QUIESCENCE: Lock[" + std::to_string(i) +
                                 "] ghost sets nonempty at quiescence",
                             taken);
            bad = true;
          }
        }
      }
    }
    return !bad;
  };

  visited.insert(fingerprint(root, cfg.crash_budget));
  rep.states = 1;
  Frame first(root);
  first.budget = cfg.crash_budget;
  detail::enumerate_choices(first.eng, first.budget, &first.choices);
  check_state(first.eng, "init");
  stack.push_back(std::move(first));

  bool capped = false;
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next >= top.choices.size()) {
      stack.pop_back();
      continue;
    }
    if (!rep.violations.empty() && stop_at_first) break;
    if (cfg.depth_cap != 0 && stack.size() > cfg.depth_cap) {
      stack.pop_back();
      continue;
    }
    detail::Choice choice = top.choices[top.next++];
    Frame child(top.eng);
    child.budget = top.budget;
    child.taken = choice.str();
    if (choice.crash) {
      child.eng.inject_crash();
      child.budget--;
    } else {
      child.eng.apply(choice.pid, choice.action);
    }
    rep.edges++;
    bool clean = check_state(child.eng, child.taken);
    if (!clean && stop_at_first) break;
    Hash128 h = fingerprint(child.eng, child.budget);
    if (!visited.insert(h).second) continue;
    rep.states++;
    if (visited.size() >= cfg.state_cap) {
      capped = true;
      break;
    }
    // Violations accumulate in the sink of engine copies; clear so children
    // only surface new ones.
    child.eng.sink().clear();
    detail::enumerate_choices(child.eng, child.budget, &child.choices);
    stack.push_back(std::move(child));
  }

  rep.complete = !capped && (rep.violations.empty() || !stop_at_first);
  if (!rep.violations.empty() && stop_at_first) rep.complete = false;
  return rep;
}

}  // namespace rmelab
