#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmelab/engine.hpp"
#include "rmelab/rme_algo.hpp"

namespace rmelab {

enum class SchedulerKind : uint8_t { RandomFair, RoundRobin, Scripted, Exhaustive };

inline const char* to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::RandomFair: return "random_fair";
    case SchedulerKind::RoundRobin: return "round_robin";
    case SchedulerKind::Scripted: return "scripted";
    case SchedulerKind::Exhaustive: return "exhaustive";
  }
  return "?";
}

inline bool scheduler_from_string(const std::string& s, SchedulerKind* out) {
  if (s == "random_fair") *out = SchedulerKind::RandomFair;
  else if (s == "round_robin") *out = SchedulerKind::RoundRobin;
  else if (s == "scripted") *out = SchedulerKind::Scripted;
  else if (s == "exhaustive") *out = SchedulerKind::Exhaustive;
  else return false;
  return true;
}

inline bool algo_from_string(const std::string& s, Algo* out) {
  if (s == "cc") *out = Algo::CC;
  else if (s == "dsm") *out = Algo::DSM;
  else return false;
  return true;
}

inline const char* to_string(Mutation m) {
  switch (m) {
    case Mutation::None: return "none";
    case Mutation::DropR5: return "drop_r5";
    case Mutation::DropE3: return "drop_e3";
    case Mutation::SwapR3R4: return "swap_r3_r4";
    case Mutation::SkipAbandon8_1: return "skip_abandon_8_1";
  }
  return "?";
}

inline bool mutation_from_string(const std::string& s, Mutation* out) {
  if (s == "none") *out = Mutation::None;
  else if (s == "drop_r5") *out = Mutation::DropR5;
  else if (s == "drop_e3") *out = Mutation::DropE3;
  else if (s == "swap_r3_r4") *out = Mutation::SwapR3R4;
  else if (s == "skip_abandon_8_1") *out = Mutation::SkipAbandon8_1;
  else return false;
  return true;
}

struct ScriptedEntry {
  bool crash = false;
  Pid pid = 0;
  std::optional<ProcAction> action;  // absent: driver default
};

struct RunConfig {
  Algo algo = Algo::CC;
  Mutation mutation = Mutation::None;
  uint32_t procs = 2;
  SchedulerKind scheduler = SchedulerKind::RandomFair;
  uint64_t seed = 1;
  uint32_t fairness_bound = 0;  // 0: defaults to 4n
  uint64_t max_steps = 10000;
  std::vector<uint64_t> crash_at;
  uint64_t crash_every = 0;
  double crash_prob = 0.0;
  uint32_t cs_dwell = 2;
  bool check_invariant = false;
  bool record_trace = true;
  bool drain = true;
  std::vector<ScriptedEntry> script;

  // exhaustive mode
  uint32_t crash_budget = 0;
  uint32_t sp_cap = 2;
  uint64_t state_cap = 20000000;
  uint64_t depth_cap = 0;
  bool allow_good_recover = true;
  bool check_quiescent_ghosts = true;

  uint32_t effective_fairness_bound() const {
    return fairness_bound == 0 ? 4 * procs : fairness_bound;
  }
};

}  // namespace rmelab
