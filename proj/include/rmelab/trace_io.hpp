#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmelab/config.hpp"
#include "rmelab/trace.hpp"

namespace rmelab {

inline const char* to_string(EvKind k) {
  switch (k) {
    case EvKind::Access: return "access";
    case EvKind::Crash: return "crash";
    case EvKind::SectionEnter: return "section_enter";
    case EvKind::SectionReturn: return "section_return";
    case EvKind::PassageClose: return "passage_close";
    case EvKind::Violation: return "violation";
  }
  return "?";
}

namespace detail {
inline void json_escape(const std::string& s, std::string* out) {
  for (char c : s) {
    switch (c) {
      case '"': *out += "\\\""; break;
      case '\\': *out += "\\\\"; break;
      case '\n': *out += "\\n"; break;
      case '\t': *out += "\\t"; break;
      default: *out += c;
    }
  }
}
}  // namespace detail

// One flat object per line, fields in a fixed order so that identical runs
// export byte-identical files. Crash records carry only step and kind.
inline void export_trace(std::ostream& os, const Trace& trace,
                         const std::vector<std::string>& cell_names) {
  std::string buf;
  for (const auto& ev : trace) {
    buf.clear();
    buf += "{\"step\":" + std::to_string(ev.step);
    buf += ",\"kind\":\"";
    buf += to_string(ev.kind);
    buf += "\"";
    switch (ev.kind) {
      case EvKind::Crash:
        break;
      case EvKind::Access:
        buf += ",\"pid\":" + std::to_string(ev.pid);
        buf += ",\"cell\":\"";
        detail::json_escape(ev.cell < cell_names.size() ? cell_names[ev.cell]
                                                        : "cell" + std::to_string(ev.cell),
                            &buf);
        buf += "\",\"op\":\"";
        buf += to_string(ev.op);
        buf += "\",\"value\":\"" + ev.value.str() + "\"";
        buf += ",\"rmr_cc\":";
        buf += ev.rmr_cc ? "true" : "false";
        buf += ",\"rmr_dsm\":";
        buf += ev.rmr_dsm ? "true" : "false";
        buf += ",\"pc_from\":\"" + ev.pc_from + "\",\"pc_to\":\"" + ev.pc_to + "\"";
        break;
      case EvKind::SectionEnter:
        buf += ",\"pid\":" + std::to_string(ev.pid);
        buf += ",\"section\":\"";
        buf += to_string(ev.section);
        buf += "\"";
        break;
      case EvKind::SectionReturn:
        buf += ",\"pid\":" + std::to_string(ev.pid);
        buf += ",\"section\":\"";
        buf += to_string(ev.section);
        buf += "\",\"result\":\"";
        buf += to_string(ev.result);
        buf += "\",\"span_lines\":" + std::to_string(ev.span_lines);
        buf += ",\"span_steps\":" + std::to_string(ev.span_steps);
        break;
      case EvKind::PassageClose:
        buf += ",\"pid\":" + std::to_string(ev.pid);
        buf += ",\"passage_cc\":" + std::to_string(ev.passage_cc);
        buf += ",\"passage_dsm\":" + std::to_string(ev.passage_dsm);
        break;
      case EvKind::Violation:
        buf += ",\"pid\":" + std::to_string(ev.pid);
        buf += ",\"code\":\"";
        buf += to_string(ev.code);
        buf += "\",\"detail\":\"";
        detail::json_escape(ev.detail, &buf);
        buf += "\"";
        break;
    }
    buf += "}\n";
    os << buf;
  }
}

// Rebuilds a trace from an exported file. Cell ids are reassigned in
// first-seen order; names carry the identity.
inline bool import_trace(std::istream& is, Trace* out,
                         std::vector<std::string>* cell_names,
                         std::string* error = nullptr) {
  out->clear();
  cell_names->clear();
  std::map<std::string, CellId> ids;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      if (error) *error = "bad json at line " + std::to_string(lineno);
      return false;
    }
    TraceEvent ev;
    ev.step = j.value("step", 0ull);
    std::string kind = j.value("kind", "");
    if (kind == "crash") {
      ev.kind = EvKind::Crash;
    } else if (kind == "access") {
      ev.kind = EvKind::Access;
      ev.pid = j.value("pid", 0u);
      std::string cell = j.value("cell", "");
      auto it = ids.find(cell);
      if (it == ids.end()) {
        it = ids.emplace(cell, static_cast<CellId>(cell_names->size())).first;
        cell_names->push_back(cell);
      }
      ev.cell = it->second;
      std::string op = j.value("op", "read");
      ev.op = op == "read"    ? MemOpKind::Read
              : op == "write" ? MemOpKind::Write
              : op == "cas"   ? MemOpKind::Cas
                              : MemOpKind::Fas;
      if (!Value::parse(j.value("value", "bot"), &ev.value)) {
        if (error) *error = "bad value at line " + std::to_string(lineno);
        return false;
      }
      ev.rmr_cc = j.value("rmr_cc", false);
      ev.rmr_dsm = j.value("rmr_dsm", false);
      ev.pc_from = j.value("pc_from", "");
      ev.pc_to = j.value("pc_to", "");
    } else if (kind == "section_enter" || kind == "section_return") {
      ev.kind = kind == "section_enter" ? EvKind::SectionEnter : EvKind::SectionReturn;
      ev.pid = j.value("pid", 0u);
      std::string sec = j.value("section", "try");
      ev.section = sec == "try"    ? Section::Try
                   : sec == "exit" ? Section::Exit
                                   : Section::Recover;
      if (ev.kind == EvKind::SectionReturn) {
        ev.result = j.value("result", "") == "in_cs" ? SectionResult::EnteredCS
                                                     : SectionResult::InRemainder;
        ev.span_lines = j.value("span_lines", 0u);
        ev.span_steps = j.value("span_steps", 0ull);
      }
    } else if (kind == "passage_close") {
      ev.kind = EvKind::PassageClose;
      ev.pid = j.value("pid", 0u);
      ev.passage_cc = j.value("passage_cc", 0ull);
      ev.passage_dsm = j.value("passage_dsm", 0ull);
    } else if (kind == "violation") {
      ev.kind = EvKind::Violation;
      ev.pid = j.value("pid", 0u);
      std::string code = j.value("code", "");
      ev.code = code == "use_pattern"   ? ViolationCode::UsePattern
                : code == "wait_single" ? ViolationCode::WaitSingle
                : code == "protocol"    ? ViolationCode::Protocol
                                        : ViolationCode::StateMirror;
      ev.detail = j.value("detail", "");
    } else {
      if (error) *error = "unknown kind at line " + std::to_string(lineno);
      return false;
    }
    out->push_back(std::move(ev));
  }
  return true;
}

// Scenario files mirror RunConfig (plus named scripted schedules) and
// round-trip losslessly.
inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["algo"] = to_string(cfg.algo);
  j["mutation"] = to_string(cfg.mutation);
  j["procs"] = cfg.procs;
  j["scheduler"] = to_string(cfg.scheduler);
  j["seed"] = cfg.seed;
  j["fairness_bound"] = cfg.fairness_bound;
  j["max_steps"] = cfg.max_steps;
  j["crash_at"] = cfg.crash_at;
  j["crash_every"] = cfg.crash_every;
  j["crash_prob"] = cfg.crash_prob;
  j["cs_dwell"] = cfg.cs_dwell;
  j["check_invariant"] = cfg.check_invariant;
  j["record_trace"] = cfg.record_trace;
  j["drain"] = cfg.drain;
  j["crash_budget"] = cfg.crash_budget;
  j["sp_cap"] = cfg.sp_cap;
  j["state_cap"] = cfg.state_cap;
  j["depth_cap"] = cfg.depth_cap;
  j["allow_good_recover"] = cfg.allow_good_recover;
  j["check_quiescent_ghosts"] = cfg.check_quiescent_ghosts;
  nlohmann::json script = nlohmann::json::array();
  for (const auto& e : cfg.script) {
    nlohmann::json je;
    je["crash"] = e.crash;
    je["pid"] = e.pid;
    if (e.action) je["action"] = to_string(*e.action);
    script.push_back(je);
  }
  j["script"] = script;
  return j;
}

inline bool config_from_json(const nlohmann::json& j, RunConfig* cfg,
                             std::string* error = nullptr) {
  auto bad = [&](const std::string& what) {
    if (error) *error = what;
    return false;
  };
  if (j.contains("algo") && !algo_from_string(j["algo"], &cfg->algo))
    return bad("bad algo");
  if (j.contains("mutation") && !mutation_from_string(j["mutation"], &cfg->mutation))
    return bad("bad mutation");
  if (j.contains("scheduler") &&
      !scheduler_from_string(j["scheduler"], &cfg->scheduler))
    return bad("bad scheduler");
  cfg->procs = j.value("procs", cfg->procs);
  cfg->seed = j.value("seed", cfg->seed);
  cfg->fairness_bound = j.value("fairness_bound", cfg->fairness_bound);
  cfg->max_steps = j.value("max_steps", cfg->max_steps);
  if (j.contains("crash_at")) {
    cfg->crash_at = j["crash_at"].get<std::vector<uint64_t>>();
  }
  cfg->crash_every = j.value("crash_every", cfg->crash_every);
  cfg->crash_prob = j.value("crash_prob", cfg->crash_prob);
  cfg->cs_dwell = j.value("cs_dwell", cfg->cs_dwell);
  cfg->check_invariant = j.value("check_invariant", cfg->check_invariant);
  cfg->record_trace = j.value("record_trace", cfg->record_trace);
  cfg->drain = j.value("drain", cfg->drain);
  cfg->crash_budget = j.value("crash_budget", cfg->crash_budget);
  cfg->sp_cap = j.value("sp_cap", cfg->sp_cap);
  cfg->state_cap = j.value("state_cap", cfg->state_cap);
  cfg->depth_cap = j.value("depth_cap", cfg->depth_cap);
  cfg->allow_good_recover = j.value("allow_good_recover", cfg->allow_good_recover);
  cfg->check_quiescent_ghosts =
      j.value("check_quiescent_ghosts", cfg->check_quiescent_ghosts);
  cfg->script.clear();
  if (j.contains("script")) {
    for (const auto& je : j["script"]) {
      ScriptedEntry e;
      e.crash = je.value("crash", false);
      e.pid = je.value("pid", 0u);
      if (je.contains("action")) {
        std::string a = je["action"];
        if (a == "invoke_try") e.action = ProcAction::InvokeTry;
        else if (a == "invoke_recover") e.action = ProcAction::InvokeRecover;
        else if (a == "invoke_exit") e.action = ProcAction::InvokeExit;
        else if (a == "dwell") e.action = ProcAction::Dwell;
        else if (a == "step") e.action = ProcAction::Step;
        else return bad("bad action");
      }
      cfg->script.push_back(e);
    }
  }
  return true;
}

}  // namespace rmelab
