// rme-lab: drive the recoverable-lock simulator from the command line.
//   run          seeded/scripted runs with crash injection + property checks
//   explore      bounded-exhaustive interleaving/crash exploration
//   rmr-scaling  per-passage RMR maxima across process counts
//   check        re-run the property suite over an exported trace

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmelab/explore.hpp"
#include "rmelab/properties.hpp"
#include "rmelab/run.hpp"
#include "rmelab/trace_io.hpp"

using namespace rmelab;

namespace {

uint64_t default_seed() {
  const char* env = std::getenv("RME_LAB_SEED");
  if (env != nullptr) {
    return std::strtoull(env, nullptr, 10);
  }
  return 1;
}

std::vector<uint64_t> parse_u64_list(const std::string& s) {
  std::vector<uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::strtoull(tok.c_str(), nullptr, 10));
  }
  return out;
}

void print_verdicts(const std::vector<PropertyVerdict>& vs) {
  std::printf("%-18s %-6s %-10s %s\n", "property", "result", "stat", "witness");
  for (const auto& v : vs) {
    std::printf("%-18s %-6s %-10llu %s\n", to_string(v.id),
                v.pass ? "pass" : "FAIL",
                static_cast<unsigned long long>(v.stat), v.witness.c_str());
  }
}

int cmd_run(const RunConfig& cfg, const std::string& trace_path) {
  auto out = run(cfg);
  print_verdicts(out.report.verdicts);
  std::printf("steps=%llu crashes=%llu violations=%zu drained=%d "
              "max_passage_cc=%llu max_passage_dsm=%llu\n",
              (unsigned long long)out.report.steps,
              (unsigned long long)out.report.crashes, out.report.violations,
              out.report.drained ? 1 : 0,
              (unsigned long long)out.report.max_passage_cc,
              (unsigned long long)out.report.max_passage_dsm);
  for (int id : out.report.invariant_failures) {
    std::printf("invariant FAILED: %s\n", invariant_condition_text(id));
  }
  if (!trace_path.empty()) {
    std::ofstream f(trace_path);
    if (!f) {
      std::fprintf(stderr, "cannot write %s\n", trace_path.c_str());
      return 2;
    }
    export_trace(f, out.trace, out.cell_names);
    std::printf("trace written to %s (%zu records)\n", trace_path.c_str(),
                out.trace.size());
  }
  return out.report.ok() ? 0 : 1;
}

int cmd_explore(const RunConfig& cfg) {
  auto rep = explore(cfg);
  std::printf("states=%llu edges=%llu quiescent=%llu complete=%d violations=%zu\n",
              (unsigned long long)rep.states, (unsigned long long)rep.edges,
              (unsigned long long)rep.quiescent_states, rep.complete ? 1 : 0,
              rep.violations.size());
  for (const auto& v : rep.violations) {
    std::printf("VIOLATION: %s\n  schedule:", v.what.c_str());
    for (const auto& s : v.schedule) std::printf(" %s", s.c_str());
    std::printf("\n");
  }
  return rep.ok() ? 0 : 1;
}

int cmd_scaling(Algo algo, const std::vector<uint64_t>& procs, int seeds,
                uint64_t steps, uint64_t crash_every) {
  CheckLimits lim = default_limits(algo);
  std::printf("%-6s %-16s %-16s %-10s\n", "n", "max_passage_cc",
              "max_passage_dsm", "ceiling");
  bool ok = true;
  for (uint64_t n : procs) {
    uint64_t max_cc = 0, max_dsm = 0;
    for (int s = 1; s <= seeds; ++s) {
      RunConfig cfg;
      cfg.algo = algo;
      cfg.procs = static_cast<uint32_t>(n);
      cfg.max_steps = steps;
      cfg.crash_every = crash_every;
      cfg.seed = static_cast<uint64_t>(s) * 7919;
      cfg.record_trace = false;
      auto out = run(cfg);
      max_cc = std::max(max_cc, out.report.max_passage_cc);
      max_dsm = std::max(max_dsm, out.report.max_passage_dsm);
      if (!all_pass(out.report.verdicts)) ok = false;
    }
    bool fits = max_cc <= lim.passage_cc &&
                (algo == Algo::CC || max_dsm <= lim.passage_dsm);
    if (!fits) ok = false;
    std::printf("%-6llu %-16llu %-16llu cc<=%llu%s%s\n",
                (unsigned long long)n, (unsigned long long)max_cc,
                (unsigned long long)max_dsm,
                (unsigned long long)lim.passage_cc,
                algo == Algo::DSM
                    ? (" dsm<=" + std::to_string(lim.passage_dsm)).c_str()
                    : "",
                fits ? "" : "  EXCEEDED");
  }
  return ok ? 0 : 1;
}

int cmd_check(const std::string& trace_path, Algo algo, bool fair, bool drained) {
  std::ifstream f(trace_path);
  if (!f) {
    std::fprintf(stderr, "cannot read %s\n", trace_path.c_str());
    return 2;
  }
  Trace trace;
  std::vector<std::string> names;
  std::string err;
  if (!import_trace(f, &trace, &names, &err)) {
    std::fprintf(stderr, "import failed: %s\n", err.c_str());
    return 2;
  }
  CheckConfig cfg;
  cfg.algo = algo;
  cfg.limits = default_limits(algo);
  cfg.fair = fair;
  cfg.drained = drained;
  auto verdicts = check_run(trace, names, cfg);
  print_verdicts(verdicts);
  return all_pass(verdicts) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator and bounded checker for two crash-recoverable queue locks"};
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.seed = default_seed();
  std::string algo_s = "cc", mutation_s = "none", scheduler_s = "random_fair";
  std::string crash_at_s, trace_path, config_path, check_s = "all";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--algo", algo_s, "cc or dsm")->check(CLI::IsMember({"cc", "dsm"}));
    sub->add_option("--mutation", mutation_s,
                    "none, drop_r5, drop_e3, swap_r3_r4, skip_abandon_8_1");
    sub->add_option("--config", config_path, "scenario file (json)");
  };

  CLI::App* runc = app.add_subcommand("run", "seeded or scripted run");
  add_common(runc);
  runc->add_option("--procs", cfg.procs, "process count");
  runc->add_option("--steps", cfg.max_steps, "scheduled steps");
  runc->add_option("--seed", cfg.seed, "scheduler/scramble seed");
  runc->add_option("--crash-at", crash_at_s, "comma-separated step indices");
  runc->add_option("--crash-every", cfg.crash_every, "crash period in steps");
  runc->add_option("--crash-prob", cfg.crash_prob, "per-step crash probability");
  runc->add_option("--dwell", cfg.cs_dwell, "steps spent inside the CS");
  runc->add_option("--fairness-bound", cfg.fairness_bound,
                   "scheduling window B (default 4n)");
  runc->add_option("--scheduler", scheduler_s, "random_fair or round_robin");
  runc->add_option("--check", check_s, "all or none (per-step invariant checks)");
  runc->add_option("--trace", trace_path, "write the trace (jsonl)");
  runc->add_flag("--no-drain", [&cfg](int64_t) { cfg.drain = false; },
                 "stop at the horizon without draining");

  CLI::App* exp = app.add_subcommand("explore", "bounded-exhaustive check");
  add_common(exp);
  exp->add_option("--procs", cfg.procs, "process count (small)");
  exp->add_option("--crashes", cfg.crash_budget, "crash budget K");
  exp->add_option("--depth", cfg.depth_cap, "depth cap (0 = none)");
  exp->add_option("--sp-cap", cfg.sp_cap, "super-passages per process");
  exp->add_option("--state-cap", cfg.state_cap, "visited-state cap");
  exp->add_option("--dwell", cfg.cs_dwell, "steps spent inside the CS");

  CLI::App* scal = app.add_subcommand("rmr-scaling", "per-passage RMR maxima by n");
  std::string procs_s = "4,16,64";
  int seeds = 16;
  uint64_t sc_steps = 100000, sc_every = 5000;
  scal->add_option("--algo", algo_s, "cc or dsm")->check(CLI::IsMember({"cc", "dsm"}));
  scal->add_option("--procs", procs_s, "comma-separated process counts");
  scal->add_option("--seeds", seeds, "seeds per process count");
  scal->add_option("--steps", sc_steps, "steps per run");
  scal->add_option("--crash-every", sc_every, "crash period");

  CLI::App* chk = app.add_subcommand("check", "re-check an exported trace");
  std::string chk_trace;
  bool chk_fair = true, chk_drained = true;
  chk->add_option("--trace", chk_trace, "trace file (jsonl)")->required();
  chk->add_option("--algo", algo_s, "cc or dsm")->check(CLI::IsMember({"cc", "dsm"}));
  chk->add_flag("!--not-fair", chk_fair, "trace came from an unfair schedule");
  chk->add_flag("!--not-drained", chk_drained, "trace was not drained");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      std::fprintf(stderr, "cannot read %s\n", config_path.c_str());
      return 2;
    }
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    std::string err;
    if (j.is_discarded() || !config_from_json(j, &cfg, &err)) {
      std::fprintf(stderr, "bad config: %s\n", err.c_str());
      return 2;
    }
    algo_s = to_string(cfg.algo);
    mutation_s = to_string(cfg.mutation);
    scheduler_s = to_string(cfg.scheduler);
  }
  if (!algo_from_string(algo_s, &cfg.algo) ||
      !mutation_from_string(mutation_s, &cfg.mutation) ||
      !scheduler_from_string(scheduler_s, &cfg.scheduler)) {
    std::fprintf(stderr, "bad flag value\n");
    return 2;
  }
  if (!crash_at_s.empty()) cfg.crash_at = parse_u64_list(crash_at_s);
  cfg.check_invariant = check_s == "all";

  if (runc->parsed()) return cmd_run(cfg, trace_path);
  if (exp->parsed()) {
    cfg.scheduler = SchedulerKind::Exhaustive;
    return cmd_explore(cfg);
  }
  if (scal->parsed()) {
    return cmd_scaling(cfg.algo, parse_u64_list(procs_s), seeds, sc_steps, sc_every);
  }
  if (chk->parsed()) return cmd_check(chk_trace, cfg.algo, chk_fair, chk_drained);
  return 2;
}
