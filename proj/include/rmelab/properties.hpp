#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rmelab/rme_algo.hpp"
#include "rmelab/trace.hpp"

namespace rmelab {

enum class PropertyId : uint8_t {
  MUTEX,
  CSR,
  BOUNDED_EXIT,
  BOUNDED_RECOVERY,
  STARVATION,
  RMR_BOUND,
  USE_PATTERN,
  WAIT_SINGLE,
  SEQ_MONOTONE,
};

inline const char* to_string(PropertyId id) {
  switch (id) {
    case PropertyId::MUTEX: return "MUTEX";
    case PropertyId::CSR: return "CSR";
    case PropertyId::BOUNDED_EXIT: return "BOUNDED_EXIT";
    case PropertyId::BOUNDED_RECOVERY: return "BOUNDED_RECOVERY";
    case PropertyId::STARVATION: return "STARVATION";
    case PropertyId::RMR_BOUND: return "RMR_BOUND";
    case PropertyId::USE_PATTERN: return "USE_PATTERN";
    case PropertyId::WAIT_SINGLE: return "WAIT_SINGLE";
    case PropertyId::SEQ_MONOTONE: return "SEQ_MONOTONE";
  }
  return "?";
}

struct PropertyVerdict {
  PropertyId id = PropertyId::MUTEX;
  bool pass = true;
  std::string witness;  // event window of the first failure
  uint64_t stat = 0;    // max observed span/window/count for the property
};

// Exit/recovery spans are counted in top-level line transitions; the RMR
// ceilings are regression values frozen from the oracle runs.
struct CheckLimits {
  uint32_t exit_lines = 0;
  uint32_t recover_lines = 0;
  uint64_t passage_cc = 0;
  uint64_t passage_dsm = 0;
};

inline constexpr uint32_t kExitLinesCc = 5;
inline constexpr uint32_t kRecoverLinesCc = 8;
inline constexpr uint32_t kExitLinesDsm = 8;
inline constexpr uint32_t kRecoverLinesDsm = 10;
// Regression ceilings for the per-passage RMR counts: one n-independent
// constant per (algorithm, cost model). Worst observations across the
// crash-heavy fair-run fleet (n up to 64, bursty and uniform schedules):
// 17 / 33 / 26; frozen with headroom so that only a real complexity
// regression (growth with n) can cross them.
inline constexpr uint64_t kPassageRmrCcAlgoCc = 24;
inline constexpr uint64_t kPassageRmrCcAlgoDsm = 44;
inline constexpr uint64_t kPassageRmrDsmAlgoDsm = 36;

inline CheckLimits default_limits(Algo a) {
  if (a == Algo::CC) {
    return {kExitLinesCc, kRecoverLinesCc, kPassageRmrCcAlgoCc, 0};
  }
  return {kExitLinesDsm, kRecoverLinesDsm, kPassageRmrCcAlgoDsm,
          kPassageRmrDsmAlgoDsm};
}

struct CheckConfig {
  Algo algo = Algo::CC;
  CheckLimits limits;
  // Starvation is only judged on fair schedules that were drained at the end
  // (no attempt can be cut off by the horizon).
  bool fair = false;
  bool drained = false;
};

namespace detail {
inline std::string at_step(uint64_t step) {
  return " at step " + std::to_string(step);
}
}  // namespace detail

// Replays a trace against the property suite. Works identically on the
// in-memory trace and on a re-imported one; cell_names resolves cell ids
// (SEQ_MONOTONE keys off the cell named "Seq").
inline std::vector<PropertyVerdict> check_run(const Trace& trace,
                                              const std::vector<std::string>& cell_names,
                                              const CheckConfig& cfg) {
  PropertyVerdict mutex;
  mutex.id = PropertyId::MUTEX;
  PropertyVerdict csr;
  csr.id = PropertyId::CSR;
  PropertyVerdict bexit;
  bexit.id = PropertyId::BOUNDED_EXIT;
  PropertyVerdict brec;
  brec.id = PropertyId::BOUNDED_RECOVERY;
  PropertyVerdict starve;
  starve.id = PropertyId::STARVATION;
  PropertyVerdict rmr;
  rmr.id = PropertyId::RMR_BOUND;
  PropertyVerdict usep;
  usep.id = PropertyId::USE_PATTERN;
  PropertyVerdict waits;
  waits.id = PropertyId::WAIT_SINGLE;
  PropertyVerdict seqm;
  seqm.id = PropertyId::SEQ_MONOTONE;

  auto fail = [](PropertyVerdict& v, std::string why) {
    if (v.pass) {
      v.pass = false;
      v.witness = std::move(why);
    }
  };

  CellId seq_cell = kNoCell;
  for (CellId i = 0; i < cell_names.size(); ++i) {
    if (cell_names[i] == "Seq") seq_cell = i;
  }

  uint64_t last_crash_step = 0;
  bool any_crash = false;
  for (const auto& ev : trace) {
    if (ev.kind == EvKind::Crash) {
      last_crash_step = ev.step;
      any_crash = true;
    }
  }

  std::set<Pid> in_cs;
  Pid csr_owner = kNoPid;
  std::map<Pid, uint64_t> open_try;  // post-last-crash try entries
  uint64_t seq_last = 1, seq_base = 1;

  for (const auto& ev : trace) {
    switch (ev.kind) {
      case EvKind::Crash:
        if (in_cs.size() == 1) csr_owner = *in_cs.begin();
        in_cs.clear();
        seq_base = seq_last;
        open_try.clear();
        break;
      case EvKind::SectionEnter:
        if (ev.section == Section::Exit) {
          in_cs.erase(ev.pid);
        } else if (ev.section == Section::Try &&
                   (!any_crash || ev.step > last_crash_step)) {
          open_try[ev.pid] = ev.step;
        }
        break;
      case EvKind::SectionReturn:
        if (ev.result == SectionResult::EnteredCS) {
          if (csr_owner != kNoPid) {
            if (csr_owner == ev.pid) {
              csr_owner = kNoPid;
            } else {
              fail(csr, "p" + std::to_string(ev.pid) +
                            " entered the CS before the crashed owner p" +
                            std::to_string(csr_owner) + " reentered" +
                            detail::at_step(ev.step));
            }
          }
          in_cs.insert(ev.pid);
          if (in_cs.size() > 1) {
            fail(mutex, "two processes in the CS" + detail::at_step(ev.step));
          }
          auto it = open_try.find(ev.pid);
          if (it != open_try.end()) {
            uint64_t window = ev.step - it->second;
            if (window > starve.stat) starve.stat = window;
            open_try.erase(it);
          }
        } else {
          if (csr_owner == ev.pid && csr_owner != kNoPid &&
              ev.section == Section::Recover) {
            fail(csr, "crashed-in-CS p" + std::to_string(ev.pid) +
                          " recovered to the remainder" + detail::at_step(ev.step));
          }
          open_try.erase(ev.pid);
        }
        if (ev.section == Section::Exit) {
          if (ev.span_lines > bexit.stat) bexit.stat = ev.span_lines;
          if (ev.span_lines > cfg.limits.exit_lines) {
            fail(bexit, "exit took " + std::to_string(ev.span_lines) +
                            " lines (max " + std::to_string(cfg.limits.exit_lines) +
                            ")" + detail::at_step(ev.step));
          }
        } else if (ev.section == Section::Recover) {
          if (ev.span_lines > brec.stat) brec.stat = ev.span_lines;
          if (ev.span_lines > cfg.limits.recover_lines) {
            fail(brec, "recover took " + std::to_string(ev.span_lines) +
                           " lines (max " +
                           std::to_string(cfg.limits.recover_lines) + ")" +
                           detail::at_step(ev.step));
          }
        }
        break;
      case EvKind::PassageClose:
        if (ev.passage_cc > rmr.stat) rmr.stat = ev.passage_cc;
        if (ev.passage_cc > cfg.limits.passage_cc) {
          fail(rmr, "passage_cc=" + std::to_string(ev.passage_cc) + " exceeds " +
                        std::to_string(cfg.limits.passage_cc) +
                        detail::at_step(ev.step));
        }
        if (cfg.algo == Algo::DSM && ev.passage_dsm > cfg.limits.passage_dsm) {
          fail(rmr, "passage_dsm=" + std::to_string(ev.passage_dsm) +
                        " exceeds " + std::to_string(cfg.limits.passage_dsm) +
                        detail::at_step(ev.step));
        }
        break;
      case EvKind::Violation:
        if (ev.code == ViolationCode::UsePattern ||
            ev.code == ViolationCode::Protocol) {
          fail(usep, ev.detail + detail::at_step(ev.step));
        } else if (ev.code == ViolationCode::WaitSingle) {
          fail(waits, ev.detail + detail::at_step(ev.step));
        }
        break;
      case EvKind::Access:
        if (ev.cell == seq_cell && seq_cell != kNoCell && ev.value.is_nat()) {
          uint64_t v = ev.value.as_nat();
          if (v < seq_last) {
            fail(seqm, "Seq decreased to " + std::to_string(v) +
                           detail::at_step(ev.step));
          }
          if (v > seq_base + 1) {
            fail(seqm, "Seq rose to " + std::to_string(v) + " from base " +
                           std::to_string(seq_base) + " without a crash" +
                           detail::at_step(ev.step));
          }
          seq_last = v;
        }
        break;
    }
  }

  if (cfg.fair && cfg.drained) {
    for (const auto& [pid, at] : open_try) {
      fail(starve, "p" + std::to_string(pid) + " never entered the CS after its try" +
                       detail::at_step(at));
    }
  }

  return {mutex, csr, bexit, brec, starve, rmr, usep, waits, seqm};
}

inline bool all_pass(const std::vector<PropertyVerdict>& vs) {
  for (const auto& v : vs) {
    if (!v.pass) return false;
  }
  return true;
}

}  // namespace rmelab
