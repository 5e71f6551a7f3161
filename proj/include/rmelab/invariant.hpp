#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "rmelab/base_lock.hpp"
#include "rmelab/labels.hpp"
#include "rmelab/rme_algo.hpp"

namespace rmelab {

// The inductive invariant as fourteen per-configuration predicates, written
// against the frozen line labels (T*/E*/R*, with T3 covering both arms of
// the first parallel line and the returns merged into T7/T12/T14). C12–C14
// appear out of order in the original numbering (15, 12, 14); here they are
// numbered by document order. Lock[i].Set means TrySet ∪ CSSet ∪ ExitSet.
namespace invariant {

inline bool pc_in(Pc pc, std::initializer_list<Pc> set) {
  return std::find(set.begin(), set.end(), pc) != set.end();
}

inline int mod3(uint64_t v) { return static_cast<int>(v % 3); }

inline bool in_live_set(const GhostSets& g, Pid p) { return g.in_any_live(p); }

using P = InvariantView::P;

// C1: 1 <= S_p <= Seq.
inline bool c1(const InvariantView& v) {
  for (const auto& p : v.procs) {
    if (p.s < 1 || p.s > v.seq) return false;
  }
  return true;
}

// C2: Lock[(Seq+1)%3] has empty live sets, and a process at R3 or R4 sees
// Lock[(S_p-1)%3] with empty live sets.
inline bool c2(const InvariantView& v) {
  if (!v.lock_ghost[mod3(v.seq + 1)]->live_empty()) return false;
  for (const auto& p : v.procs) {
    if (pc_in(p.pc, {Pc::R3, Pc::R4}) &&
        !v.lock_ghost[mod3(p.s - 1)]->live_empty()) {
      return false;
    }
  }
  return true;
}

// C3: Stop[Seq%3] and Stop[(Seq+1)%3] are down, and a process at R4 sees
// Stop[(S_p-1)%3] down.
inline bool c3(const InvariantView& v) {
  if (v.stop[mod3(v.seq)] || v.stop[mod3(v.seq + 1)]) return false;
  for (const auto& p : v.procs) {
    if (p.pc == Pc::R4 && v.stop[mod3(p.s - 1)]) return false;
  }
  return true;
}

// C4: inactive, stale-sequence, or post-handoff processes are not in the
// active lock's set; a process two sequences behind is not in its own lock's
// set either.
inline bool c4(const InvariantView& v) {
  for (const auto& p : v.procs) {
    bool premise = !p.active || p.s < v.seq ||
                   pc_in(p.pc, {Pc::T2, Pc::E3, Pc::E4, Pc::R6, Pc::R7});
    if (premise && in_live_set(*v.lock_ghost[mod3(v.seq)], p.pid)) return false;
    if (p.s + 1 < v.seq && in_live_set(*v.lock_ghost[mod3(p.s)], p.pid)) {
      return false;
    }
  }
  return true;
}

// C5: per lock, a process sits in at most one of the three live sets.
inline bool c5(const InvariantView& v) {
  for (const auto& p : v.procs) {
    for (int i = 0; i < 3; ++i) {
      const GhostSets& g = *v.lock_ghost[i];
      int n = (g.try_set.count(p.pid) ? 1 : 0) + (g.cs_set.count(p.pid) ? 1 : 0) +
              (g.exit_set.count(p.pid) ? 1 : 0);
      if (n > 1) return false;
    }
  }
  return true;
}

// C6: a process inside a base-lock try (T3 or T10) is in that lock's TrySet.
inline bool c6(const InvariantView& v) {
  for (const auto& p : v.procs) {
    if (pc_in(p.pc, {Pc::T3, Pc::T10}) &&
        !v.lock_ghost[mod3(p.s)]->try_set.count(p.pid)) {
      return false;
    }
  }
  return true;
}

// C7: a process that came out of a base-lock try and has not exited it is in
// that lock's CSSet (T5 with its stop flag down, T6..T8, T11..T14, or CS/E1
// while its sequence is current).
inline bool c7(const InvariantView& v) {
  for (const auto& p : v.procs) {
    bool premise =
        (p.pc == Pc::T5 && !v.stop[mod3(p.s)]) ||
        pc_in(p.pc, {Pc::T6, Pc::T7, Pc::T8, Pc::T11, Pc::T12, Pc::T13, Pc::T14}) ||
        (pc_in(p.pc, {Pc::CS, Pc::E1}) && p.s == v.seq);
    if (premise && !v.lock_ghost[mod3(p.s)]->cs_set.count(p.pid)) return false;
  }
  return true;
}

// C8: a process running a base-lock exit (E2) is in that lock's ExitSet.
inline bool c8(const InvariantView& v) {
  for (const auto& p : v.procs) {
    if (p.pc == Pc::E2 && !v.lock_ghost[mod3(p.s)]->exit_set.count(p.pid)) {
      return false;
    }
  }
  return true;
}

// C9: the barrier names exactly the processes between the handoff write and
// the release — nobody inactive or before T14 owns it, T14 sees it empty,
// and CS..E3 (or a crashed-in-CS status) implies ownership.
inline bool c9(const InvariantView& v) {
  for (const auto& p : v.procs) {
    bool not_owner =
        !p.active ||
        pc_in(p.pc, {Pc::T1, Pc::T2, Pc::T3, Pc::T5, Pc::T6, Pc::T7, Pc::T8,
                     Pc::T9, Pc::T9_1, Pc::T10, Pc::T11, Pc::T12, Pc::T13,
                     Pc::E4, Pc::R7});
    if (not_owner && v.barrier == Value::pid(p.pid)) return false;
    if (p.pc == Pc::T14 && !v.barrier.is_bot()) return false;
    bool owner = pc_in(p.pc, {Pc::CS, Pc::E1, Pc::E2, Pc::E2_1, Pc::E3}) ||
                 p.status == Status::RecoverFromCs;
    if (owner && !(v.barrier == Value::pid(p.pid))) return false;
  }
  return true;
}

// C10: Active_p is up exactly between T1 and E4 (and through an install),
// and down in the remainder/recover-with-clean-status states.
inline bool c10(const InvariantView& v) {
  for (const auto& p : v.procs) {
    bool must_be_active =
        pc_in(p.pc, {Pc::T2, Pc::T3, Pc::T5, Pc::T6, Pc::T7, Pc::T8, Pc::T9,
                     Pc::T9_1, Pc::T10, Pc::T11, Pc::T12, Pc::T13, Pc::T14,
                     Pc::CS, Pc::E1, Pc::E2, Pc::E2_1, Pc::E3, Pc::E4, Pc::R2,
                     Pc::R3, Pc::R4, Pc::R5});
    if (must_be_active && !p.active) return false;
    bool rec_clean =
        pc_in(p.pc, {Pc::Rem, Pc::R1, Pc::R2, Pc::R3, Pc::R4, Pc::R5, Pc::R5_1,
                     Pc::R6, Pc::R7}) &&
        (p.status == Status::Good || p.status == Status::RecoverFromRem);
    if ((rec_clean || pc_in(p.pc, {Pc::T1, Pc::R8})) && p.active) return false;
  }
  return true;
}

// C11: how far S_p can trail Seq at each line, and R6 with barrier ownership
// implies the sequence already moved on.
inline bool c11(const InvariantView& v) {
  for (const auto& p : v.procs) {
    if (pc_in(p.pc, {Pc::T3, Pc::T5, Pc::T6, Pc::T7, Pc::T8, Pc::E2, Pc::R2,
                     Pc::R3, Pc::R4}) &&
        !(p.s == v.seq || p.s + 1 == v.seq)) {
      return false;
    }
    if (pc_in(p.pc, {Pc::T9, Pc::R5}) && p.s + 1 != v.seq) return false;
    if (pc_in(p.pc, {Pc::T10, Pc::T11, Pc::T12, Pc::T13, Pc::T14}) &&
        p.s != v.seq) {
      return false;
    }
    if (p.pc == Pc::R6 && v.barrier == Value::pid(p.pid) && !(p.s < v.seq)) {
      return false;
    }
  }
  return true;
}

// C12 (listed as 15 in the original numbering): once Seq moved past a
// waiter at T3/T5/T6, its stop flag is up or an installer is poised at R5 to
// raise it.
inline bool c12(const InvariantView& v) {
  for (const auto& p : v.procs) {
    if (pc_in(p.pc, {Pc::T3, Pc::T5, Pc::T6}) && p.s + 1 == v.seq) {
      if (v.stop[mod3(p.s)]) continue;
      bool poised = false;
      for (const auto& q : v.procs) {
        if (q.pc == Pc::R5 && q.s == p.s) {
          poised = true;
          break;
        }
      }
      if (!poised) return false;
    }
  }
  return true;
}

// C13 (listed as 12): while anyone is past the install point, no process
// still holding the current sequence waits to re-install at Rem/R1, and
// every installer mid-R2..R5 holds the previous sequence.
inline bool c13(const InvariantView& v) {
  bool premise = false;
  for (const auto& p : v.procs) {
    if (pc_in(p.pc, {Pc::T3, Pc::T5, Pc::T6, Pc::T7, Pc::E2, Pc::R2, Pc::R3,
                     Pc::R4, Pc::R5}) &&
        p.s + 1 == v.seq) {
      premise = true;
    }
    if (p.pc == Pc::T7 && !v.barrier.is_bot()) premise = true;
    if (pc_in(p.pc, {Pc::T8, Pc::T9, Pc::T9_1, Pc::T10, Pc::T11, Pc::T12,
                     Pc::T13, Pc::T14})) {
      premise = true;
    }
  }
  if (!premise) return true;
  for (const auto& q : v.procs) {
    if (pc_in(q.pc, {Pc::Rem, Pc::R1}) && q.active && q.s == v.seq) return false;
    if (pc_in(q.pc, {Pc::R2, Pc::R3, Pc::R4, Pc::R5}) && q.s + 1 != v.seq) {
      return false;
    }
  }
  return true;
}

// C14: at most two working queues. The per-r disjunct is transcribed with
// the implication inside the disjunction exactly as parenthesized in the
// original, so it only constrains processes sitting at T5.
inline bool c14_harmless(const InvariantView& v, const P& r) {
  if (pc_in(r.pc, {Pc::Rem, Pc::T1, Pc::T2, Pc::T3, Pc::T9, Pc::E4, Pc::R1,
                   Pc::R2, Pc::R3, Pc::R4, Pc::R5, Pc::R5_1, Pc::R6, Pc::R7,
                   Pc::R8})) {
    return true;
  }
  return r.pc != Pc::T5 || v.stop[mod3(r.s)];
}

inline bool c14(const InvariantView& v) {
  for (const auto& p : v.procs) {
    if (pc_in(p.pc, {Pc::T7, Pc::T8, Pc::T13}) && p.s == v.seq &&
        v.barrier.is_pid()) {
      Pid owner = v.barrier.as_pid();
      const P* q = nullptr;
      for (const auto& cand : v.procs) {
        if (cand.pid == owner) q = &cand;
      }
      if (q == nullptr) return false;
      if (q->s + 1 != v.seq) return false;
      bool member = v.lock_ghost[mod3(q->s)]->cs_set.count(q->pid) != 0;
      if (v.algo == Algo::DSM) {
        // The DSM variant's old-queue winner abandons its lock while it
        // still owns the barrier (E2.1); mid-abandon it sits in the
        // ExitSet, and until its release takes effect it sits at E3.
        member = member || v.lock_ghost[mod3(q->s)]->exit_set.count(q->pid) != 0 ||
                 q->pc == Pc::E3;
      }
      if (!member) return false;
      for (const auto& r : v.procs) {
        if (r.pid != q->pid && r.s == q->s && !c14_harmless(v, r)) return false;
      }
    }
    bool second = (pc_in(p.pc, {Pc::T8, Pc::T13}) && p.s == v.seq &&
                   v.barrier.is_bot()) ||
                  p.pc == Pc::T14;
    if (second) {
      for (const auto& r : v.procs) {
        if (r.s + 1 == v.seq && !c14_harmless(v, r)) return false;
      }
      // The CC old-queue winner never leaves its lock's CSSet, so the old
      // queue provably has an occupant here; the DSM winner may already
      // have abandoned the lock and drained, so the occupancy claim does
      // not transfer.
      if (v.algo == Algo::CC &&
          v.lock_ghost[mod3(v.seq - 1)]->cs_set.empty()) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace invariant

// Evaluates all fourteen conditions; the returned ids (1-based) are the ones
// that failed. Pure: only reads the view.
inline std::vector<int> eval_invariant(const InvariantView& v) {
  using namespace invariant;
  std::vector<int> out;
  bool ok[15] = {};
  ok[1] = c1(v);
  ok[2] = c2(v);
  ok[3] = c3(v);
  ok[4] = c4(v);
  ok[5] = c5(v);
  ok[6] = c6(v);
  ok[7] = c7(v);
  ok[8] = c8(v);
  ok[9] = c9(v);
  ok[10] = c10(v);
  ok[11] = c11(v);
  ok[12] = c12(v);
  ok[13] = c13(v);
  ok[14] = c14(v);
  for (int i = 1; i <= 14; ++i) {
    if (!ok[i]) out.push_back(i);
  }
  return out;
}

inline const char* invariant_condition_text(int id) {
  switch (id) {
    case 1: return "C1: 1 <= S_p <= Seq for every registered process";
    case 2: return "C2: Lock[(Seq+1)%3] live sets empty; at R3/R4, Lock[(S_p-1)%3] live sets empty";
    case 3: return "C3: Stop[Seq%3] and Stop[(Seq+1)%3] down; at R4, Stop[(S_p-1)%3] down";
    case 4: return "C4: inactive/stale/post-handoff processes are outside Lock[Seq%3].Set; S_p < Seq-1 keeps p outside Lock[S_p%3].Set";
    case 5: return "C5: per lock, p is in at most one of TrySet/CSSet/ExitSet";
    case 6: return "C6: at T3 or T10, p is in Lock[S_p%3].TrySet";
    case 7: return "C7: at T5(stop down)/T6-T8/T11-T14/CS,E1(S_p=Seq), p is in Lock[S_p%3].CSSet";
    case 8: return "C8: at E2, p is in Lock[S_p%3].ExitSet";
    case 9: return "C9: barrier ownership matches pc: none before T14/inactive, Bot at T14, owned through CS..E3 or when recover-from-cs";
    case 10: return "C10: Active_p raised exactly across T2..E4 and R2..R5; down at Rem/R1-R7 with clean status, at T1, and at R8";
    case 11: return "C11: S_p in {Seq-1,Seq} at T3-T8/E2/R2-R4; = Seq-1 at T9/R5; = Seq at T10-T14; R6 with barrier=p implies S_p < Seq";
    case 12: return "C12 (listed as 15 in the original numbering): T3/T5/T6 with S_p = Seq-1 implies Stop[S_p%3] up or some q at R5 with S_q = S_p";
    case 13: return "C13 (listed as 12): past the install point, no q waits at Rem/R1 with Active and S_q = Seq, and every q at R2-R5 has S_q = Seq-1";
    case 14: return "C14: barrier held from an old queue implies that queue is frozen (per-r clause kept literally as 'in harmless set OR (at T5 -> stop up)'); barrier free past T8/T13 or at T14 implies the old queue froze and its CSSet is nonempty";
  }
  return "?";
}

}  // namespace rmelab
