#pragma once

#include <cstdint>

namespace rmelab {

// Top-level program-counter labels of the recoverable lock machines. T3
// covers the whole first parallel line (lock try arm + stop-poll arm); the
// DSM-only lines sit at T9_1 (abandon while migrating), E2_1 (abandon on
// exit) and R5_1 (abandon while recovering). A label names the line the
// process will execute next.
enum class Pc : uint8_t {
  Rem,
  T1,
  T2,
  T3,
  T5,
  T6,
  T7,
  T8,
  T9,
  T9_1,
  T10,
  T11,
  T12,
  T13,
  T14,
  CS,
  E1,
  E2,
  E2_1,
  E3,
  E4,
  R1,
  R2,
  R3,
  R4,
  R5,
  R5_1,
  R6,
  R7,
  R8,
};

inline const char* to_string(Pc pc) {
  switch (pc) {
    case Pc::Rem: return "REM";
    case Pc::T1: return "T1";
    case Pc::T2: return "T2";
    case Pc::T3: return "T3";
    case Pc::T5: return "T5";
    case Pc::T6: return "T6";
    case Pc::T7: return "T7";
    case Pc::T8: return "T8";
    case Pc::T9: return "T9";
    case Pc::T9_1: return "T9.1";
    case Pc::T10: return "T10";
    case Pc::T11: return "T11";
    case Pc::T12: return "T12";
    case Pc::T13: return "T13";
    case Pc::T14: return "T14";
    case Pc::CS: return "CS";
    case Pc::E1: return "E1";
    case Pc::E2: return "E2";
    case Pc::E2_1: return "E2.1";
    case Pc::E3: return "E3";
    case Pc::E4: return "E4";
    case Pc::R1: return "R1";
    case Pc::R2: return "R2";
    case Pc::R3: return "R3";
    case Pc::R4: return "R4";
    case Pc::R5: return "R5";
    case Pc::R5_1: return "R5.1";
    case Pc::R6: return "R6";
    case Pc::R7: return "R7";
    case Pc::R8: return "R8";
  }
  return "?";
}

inline bool in_try_section(Pc pc) {
  return pc >= Pc::T1 && pc <= Pc::T14;
}
inline bool in_exit_section(Pc pc) {
  return pc >= Pc::E1 && pc <= Pc::E4;
}
inline bool in_recover_section(Pc pc) {
  return pc >= Pc::R1 && pc <= Pc::R8;
}

enum class Status : uint8_t {
  Good,
  RecoverFromTry,
  RecoverFromCs,
  RecoverFromExit,
  RecoverFromRem,
};

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Good: return "good";
    case Status::RecoverFromTry: return "recover-from-try";
    case Status::RecoverFromCs: return "recover-from-cs";
    case Status::RecoverFromExit: return "recover-from-exit";
    case Status::RecoverFromRem: return "recover-from-rem";
  }
  return "?";
}

}  // namespace rmelab
