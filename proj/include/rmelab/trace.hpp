#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmelab/value.hpp"

namespace rmelab {

enum class EvKind : uint8_t {
  Access,
  Crash,
  SectionEnter,
  SectionReturn,
  PassageClose,
  Violation,
};

enum class MemOpKind : uint8_t { Read, Write, Cas, Fas };

enum class Section : uint8_t { Try, Exit, Recover };

enum class SectionResult : uint8_t { EnteredCS, InRemainder };

enum class ViolationCode : uint8_t {
  UsePattern,    // base-lock use-pattern broken
  WaitSingle,    // two concurrent waiters on one slot / signal
  Protocol,      // §-level client protocol misuse (wrong section invoked)
  StateMirror,   // wait-object abstract state diverged from its x cell
};

inline const char* to_string(Section s) {
  switch (s) {
    case Section::Try:
      return "try";
    case Section::Exit:
      return "exit";
    case Section::Recover:
      return "recover";
  }
  return "?";
}

inline const char* to_string(SectionResult r) {
  return r == SectionResult::EnteredCS ? "in_cs" : "in_rem";
}

inline const char* to_string(MemOpKind k) {
  switch (k) {
    case MemOpKind::Read:
      return "read";
    case MemOpKind::Write:
      return "write";
    case MemOpKind::Cas:
      return "cas";
    case MemOpKind::Fas:
      return "fas";
  }
  return "?";
}

inline const char* to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::UsePattern:
      return "use_pattern";
    case ViolationCode::WaitSingle:
      return "wait_single";
    case ViolationCode::Protocol:
      return "protocol";
    case ViolationCode::StateMirror:
      return "state_mirror";
  }
  return "?";
}

// One trace record. Access and Crash records each own a simulator step index;
// section/passage/violation records share the index of the step they were
// glued to. Unused fields stay zeroed for the kinds that do not carry them.
struct TraceEvent {
  uint64_t step = 0;
  EvKind kind = EvKind::Access;
  Pid pid = kNoPid;

  // Access
  CellId cell = kNoCell;
  MemOpKind op = MemOpKind::Read;
  Value value;  // cell value after the op
  bool rmr_cc = false;
  bool rmr_dsm = false;
  std::string pc_from, pc_to;

  // SectionEnter / SectionReturn
  Section section = Section::Try;
  SectionResult result = SectionResult::InRemainder;
  uint32_t span_lines = 0;   // top-level line transitions inside the section
  uint64_t span_steps = 0;   // raw scheduled steps inside the section

  // PassageClose
  uint64_t passage_cc = 0;
  uint64_t passage_dsm = 0;

  // Violation
  ViolationCode code = ViolationCode::UsePattern;
  std::string detail;
};

using Trace = std::vector<TraceEvent>;

// Receives events from the engine. Access records can be switched off for
// the long property runs (they dominate the volume); section, passage and
// violation records are always kept, and violations are additionally pinned
// so a report can carry its witness.
class TraceSink {
 public:
  explicit TraceSink(bool record_access = true) : record_access_(record_access) {}

  void emit(TraceEvent ev) {
    if (ev.kind == EvKind::Violation) violations_.push_back(ev);
    if (ev.kind == EvKind::Access && !record_access_) return;
    events_.push_back(std::move(ev));
  }

  const Trace& events() const { return events_; }
  const Trace& violations() const { return violations_; }
  bool recording() const { return record_access_; }
  void clear() {
    events_.clear();
    violations_.clear();
  }

 private:
  bool record_access_;
  Trace events_;
  Trace violations_;
};

}  // namespace rmelab
