#pragma once

#include <cassert>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "rmelab/rng.hpp"
#include "rmelab/trace.hpp"
#include "rmelab/value.hpp"

namespace rmelab {

// One shared word. Persistent cells survive a system crash; volatile ones are
// rescrambled. owner is the DSM partition; a cell with no owner is remote to
// every process.
struct Cell {
  Value value;
  bool persistent = true;
  Pid owner = kNoPid;
  std::string name;
};

struct MemOp {
  MemOpKind kind = MemOpKind::Read;
  Value a;  // Write/Fas: new value. Cas: expected value.
  Value b;  // Cas: new value.

  static MemOp read() { return {MemOpKind::Read, {}, {}}; }
  static MemOp write(Value v) { return {MemOpKind::Write, v, {}}; }
  static MemOp cas(Value expect, Value desired) {
    return {MemOpKind::Cas, expect, desired};
  }
  static MemOp fas(Value v) { return {MemOpKind::Fas, v, {}}; }
};

struct AccessResult {
  Value result;  // Read: value; Fas: previous value; Cas: Bool; Write: Bot
  Value after;   // cell value after the op
  bool rmr_cc = false;
  bool rmr_dsm = false;
};

struct RmrCounters {
  uint64_t total_cc = 0;
  uint64_t total_dsm = 0;
  uint64_t passage_cc = 0;
  uint64_t passage_dsm = 0;
  uint64_t max_passage_cc = 0;
  uint64_t max_passage_dsm = 0;
};

// Simulated NVM with both cost models charged on every access: CC charges
// non-reads and cache misses (write-invalidate, unbounded caches), DSM
// charges accesses outside the caller's partition. Single-threaded by
// construction; the harness serializes every step.
class Memory {
 public:
  CellId alloc_cell(bool persistent, Pid owner, Value init, std::string name) {
    CellId id = static_cast<CellId>(cells_.size());
    cells_.push_back(Cell{init, persistent, owner, std::move(name)});
    return id;
  }

  size_t cell_count() const { return cells_.size(); }

  void ensure_proc(Pid p) {
    if (p >= caches_.size()) {
      caches_.resize(p + 1);
      counters_.resize(p + 1);
    }
  }

  AccessResult access(Pid p, CellId id, const MemOp& op) {
    if (id >= cells_.size()) {
      std::fprintf(stderr, "fatal: access to unallocated cell %u\n", id);
      std::abort();
    }
    ensure_proc(p);
    Cell& cell = cells_[id];
    AccessResult res;
    res.rmr_dsm = cell.owner == kNoPid || cell.owner != p;

    if (op.kind == MemOpKind::Read) {
      res.result = cell.value;
      res.rmr_cc = !cached(p, id);
      cache_insert(p, id, cell.value);
    } else {
      res.rmr_cc = true;
      invalidate_all(id);
      switch (op.kind) {
        case MemOpKind::Write:
          cell.value = op.a;
          res.result = Value::bot();
          break;
        case MemOpKind::Fas:
          res.result = cell.value;
          cell.value = op.a;
          break;
        case MemOpKind::Cas:
          if (cell.value == op.a) {
            cell.value = op.b;
            res.result = Value::boolean(true);
          } else {
            res.result = Value::boolean(false);
          }
          break;
        case MemOpKind::Read:
          break;
      }
    }
    res.after = cell.value;
    RmrCounters& c = counters_[p];
    if (res.rmr_cc) {
      c.total_cc++;
      c.passage_cc++;
    }
    if (res.rmr_dsm) {
      c.total_dsm++;
      c.passage_dsm++;
    }
    return res;
  }

  // Crash semantics: every cache empties, volatile cells take adversarial
  // values from the run RNG, NVM cells are untouched. A null rng pins the
  // scramble to Bot (exploration keeps its state space canonical that way).
  void system_crash(Rng* rng) {
    for (auto& c : caches_) c.clear();
    for (auto& cell : cells_) {
      if (!cell.persistent) {
        cell.value = rng ? scramble_value(*rng) : Value::bot();
      }
    }
  }

  // Biased toward the values most likely to confuse the algorithms.
  Value scramble_value(Rng& rng) {
    switch (rng.below(6)) {
      case 0:
        return Value::bot();
      case 1:
        return Value::token();
      case 2:
        return Value::pid(static_cast<Pid>(rng.below(caches_.size() + 1)));
      case 3:
        return cells_.empty()
                   ? Value::bot()
                   : Value::ref(static_cast<CellId>(rng.below(cells_.size())));
      case 4:
        return Value::boolean(rng.below(2) != 0);
      default:
        return Value::nat(rng.below(1u << 16));
    }
  }

  const RmrCounters& rmr_stats(Pid p) {
    ensure_proc(p);
    return counters_[p];
  }

  void begin_passage(Pid p) {
    ensure_proc(p);
    counters_[p].passage_cc = 0;
    counters_[p].passage_dsm = 0;
  }

  // Folds the finished passage into the per-process maxima and returns it.
  std::pair<uint64_t, uint64_t> close_passage(Pid p) {
    ensure_proc(p);
    RmrCounters& c = counters_[p];
    if (c.passage_cc > c.max_passage_cc) c.max_passage_cc = c.passage_cc;
    if (c.passage_dsm > c.max_passage_dsm) c.max_passage_dsm = c.passage_dsm;
    auto out = std::make_pair(c.passage_cc, c.passage_dsm);
    c.passage_cc = 0;
    c.passage_dsm = 0;
    return out;
  }

  // Checker access: no charge, no cache effect.
  const Value& peek(CellId id) const {
    assert(id < cells_.size());
    return cells_[id].value;
  }
  const Cell& cell(CellId id) const {
    assert(id < cells_.size());
    return cells_[id];
  }

  bool cached(Pid p, CellId id) const {
    if (p >= caches_.size()) return false;
    for (const auto& e : caches_[p]) {
      if (e.first == id) return true;
    }
    return false;
  }

  // Exposed so the coherence property test can cross-check every entry.
  const std::vector<std::pair<CellId, Value>>& cache_of(Pid p) {
    ensure_proc(p);
    return caches_[p];
  }

  void hash_cells(Hash128& h) const {
    for (const auto& c : cells_) {
      h.mix((static_cast<uint64_t>(c.value.kind) << 56) ^ c.value.payload);
    }
  }

  std::vector<std::string> cell_names() const {
    std::vector<std::string> out;
    out.reserve(cells_.size());
    for (const auto& c : cells_) out.push_back(c.name);
    return out;
  }

 private:
  void cache_insert(Pid p, CellId id, Value v) {
    for (auto& e : caches_[p]) {
      if (e.first == id) {
        e.second = v;
        return;
      }
    }
    caches_[p].emplace_back(id, v);
  }

  void invalidate_all(CellId id) {
    for (auto& cache : caches_) {
      for (size_t i = 0; i < cache.size(); ++i) {
        if (cache[i].first == id) {
          cache[i] = cache.back();
          cache.pop_back();
          break;
        }
      }
    }
  }

  std::vector<Cell> cells_;
  // Per-process caches; linear scans beat hashing at these sizes.
  std::vector<std::vector<std::pair<CellId, Value>>> caches_;
  std::vector<RmrCounters> counters_;
};

}  // namespace rmelab
