// Command-line front end for the Deladas deployment engine: parse and check
// goals, solve them into DDDs, verify DDDs, diff configurations, and run the
// autonomic loop against a scripted scenario.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deladas/adme.hpp"
#include "deladas/ddd.hpp"
#include "deladas/fabric.hpp"
#include "deladas/model.hpp"
#include "deladas/parser.hpp"
#include "deladas/solver.hpp"

namespace {

constexpr int kExitOk = 0;        // success / SAT / valid
constexpr int kExitUnsat = 1;     // UNSAT or constraint violation
constexpr int kExitUsage = 2;     // usage, parse, or referential error
constexpr int kExitInternal = 3;  // internal or budget error

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << contents;
  return out.good();
}

void print_diagnostics(const std::string& file,
                       const std::vector<deladas::Diagnostic>& diags) {
  for (const auto& d : diags) {
    std::cerr << file;
    if (d.line > 0) std::cerr << ":" << d.line << ":" << d.column;
    std::cerr << ": " << (d.is_error() ? "error" : "warning") << ": "
              << d.message << "\n";
  }
}

std::optional<deladas::Goal> load_goal(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << path << ": error: cannot read file\n";
    return std::nullopt;
  }
  deladas::ParseResult parsed = deladas::parse_goal(*text);
  print_diagnostics(path, parsed.diagnostics);
  if (!parsed.ok()) return std::nullopt;
  return std::move(*parsed.goal);
}

int cmd_check(const std::string& goal_file) {
  auto goal = load_goal(goal_file);
  if (!goal) return kExitUsage;
  std::cout << "goal " << goal->name << ": " << goal->component_types.size()
            << " component types, " << goal->hosts.size() << " hosts, "
            << goal->clauses.size() << " constraint clauses\n";
  for (const auto& type : goal->component_types) {
    std::cout << "  " << type.name << " ports { ";
    for (size_t i = 0; i < type.ports.size(); ++i) {
      if (i) std::cout << ", ";
      std::cout << type.ports[i].name << ": "
                << deladas::to_string(type.ports[i].direction);
    }
    std::cout << (type.ports.empty() ? "}" : " }") << "\n";
  }
  return kExitOk;
}

int cmd_solve(const std::string& goal_file, int max_solutions, uint64_t seed,
              const std::string& out_dir) {
  auto goal = load_goal(goal_file);
  if (!goal) return kExitUsage;

  deladas::SolveOptions opts;
  opts.max_solutions = max_solutions;
  opts.seed = seed;
  deladas::SolveResult result = deladas::solve(*goal, opts);
  std::cout << deladas::to_string(result.status)
            << " solutions=" << result.solutions.size()
            << " nodes=" << result.nodes_explored << "\n";
  if (result.status == deladas::SolveStatus::BudgetExhausted)
    return kExitInternal;
  if (result.status == deladas::SolveStatus::Unsat) return kExitUnsat;

  std::filesystem::create_directories(out_dir);
  for (size_t k = 0; k < result.solutions.size(); ++k) {
    std::string path = out_dir + "/solution-" + std::to_string(k + 1) +
                       ".ddd.json";
    if (!write_file(path, deladas::emit_ddd(result.solutions[k], *goal))) {
      std::cerr << path << ": error: cannot write file\n";
      return kExitInternal;
    }
    std::cout << "wrote " << path << "\n";
  }
  return kExitOk;
}

int cmd_verify(const std::string& goal_file, const std::string& ddd_file) {
  auto goal = load_goal(goal_file);
  if (!goal) return kExitUsage;
  auto text = read_file(ddd_file);
  if (!text) {
    std::cerr << ddd_file << ": error: cannot read file\n";
    return kExitUsage;
  }
  deladas::DddParseResult doc = deladas::parse_ddd(*text);
  print_diagnostics(ddd_file, doc.diagnostics);
  if (!doc.ok()) return kExitUsage;

  auto structural = deladas::validate_configuration(*doc.configuration, *goal);
  if (deladas::has_errors(structural)) {
    print_diagnostics(ddd_file, structural);
    return kExitUsage;
  }
  deladas::CheckResult check =
      deladas::check_configuration(*doc.configuration, *goal);
  if (check.valid) {
    std::cout << "valid\n";
    return kExitOk;
  }
  std::cout << "invalid: violated clauses";
  for (const auto& v : check.violations)
    std::cout << " " << v.index << " (line " << v.line << ")";
  std::cout << "\n";
  return kExitUnsat;
}

int cmd_diff(const std::string& from_file, const std::string& to_file,
             const std::string& out_file) {
  auto from_text = read_file(from_file);
  auto to_text = read_file(to_file);
  if (!from_text || !to_text) {
    std::cerr << (from_text ? to_file : from_file)
              << ": error: cannot read file\n";
    return kExitUsage;
  }
  deladas::DddParseResult from = deladas::parse_ddd(*from_text);
  print_diagnostics(from_file, from.diagnostics);
  deladas::DddParseResult to = deladas::parse_ddd(*to_text);
  print_diagnostics(to_file, to.diagnostics);
  if (!from.ok() || !to.ok()) return kExitUsage;

  deladas::ReconfigurationPlan plan =
      deladas::diff(*from.configuration, *to.configuration);
  std::string text = deladas::plan_to_text(plan);
  if (out_file.empty()) {
    std::cout << text;
  } else {
    if (!write_file(out_file, text)) {
      std::cerr << out_file << ": error: cannot write file\n";
      return kExitInternal;
    }
    std::cout << "wrote " << out_file << " (" << plan.size() << " actions)\n";
  }
  return kExitOk;
}

int cmd_run(const std::string& goal_file, const std::string& scenario_file,
            int64_t ticks, uint64_t seed, const std::string& log_file,
            const std::string& out_dir, const std::string& status_file,
            const std::string& reload_file, int64_t reload_at) {
  auto goal = load_goal(goal_file);
  if (!goal) return kExitUsage;

  std::vector<deladas::ScenarioEvent> scenario;
  if (!scenario_file.empty()) {
    auto text = read_file(scenario_file);
    if (!text) {
      std::cerr << scenario_file << ": error: cannot read file\n";
      return kExitUsage;
    }
    deladas::ScenarioParseResult parsed = deladas::parse_scenario(*text);
    print_diagnostics(scenario_file, parsed.diagnostics);
    if (!parsed.ok()) return kExitUsage;
    scenario = std::move(parsed.events);
  }

  deladas::SolveOptions opts;
  opts.seed = seed;
  deladas::AdmeEngine engine(*goal, opts);
  if (!reload_file.empty()) {
    auto reload = load_goal(reload_file);
    if (!reload) return kExitUsage;
    engine.schedule_goal_reload(std::move(*reload), reload_at);
  }
  engine.run(scenario, ticks);
  deladas::RunReport report{engine.status(), engine.goal(), engine.fabric(),
                            engine.log(), engine.solver_calls()};

  std::ostringstream log_text;
  for (const auto& line : report.log) log_text << line << "\n";
  log_text << "final phase=" << deladas::to_string(report.status.phase)
           << " goal-revision=" << report.status.goal_revision
           << " solver-calls=" << report.solver_calls << "\n";
  if (log_file.empty()) {
    std::cout << log_text.str();
  } else if (!write_file(log_file, log_text.str())) {
    std::cerr << log_file << ": error: cannot write file\n";
    return kExitInternal;
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    deladas::Configuration final_config = deladas::observe(report.fabric);
    std::string path = out_dir + "/final.ddd.json";
    if (!write_file(path, deladas::emit_ddd(final_config, report.goal))) {
      std::cerr << path << ": error: cannot write file\n";
      return kExitInternal;
    }
    std::ostringstream scripts;
    for (const auto& line : report.fabric.enactment_log) scripts << line << "\n";
    if (!write_file(out_dir + "/enactment.log", scripts.str())) {
      std::cerr << out_dir << "/enactment.log: error: cannot write file\n";
      return kExitInternal;
    }
  }
  if (!status_file.empty() &&
      !write_file(status_file,
                  deladas::status_to_json(report.status).dump(2) + "\n")) {
    std::cerr << status_file << ": error: cannot write file\n";
    return kExitInternal;
  }

  switch (report.status.phase) {
    case deladas::AdmePhase::Steady:
      return kExitOk;
    case deladas::AdmePhase::StalledUnsat:
      return kExitUnsat;
    default:
      return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deladas constraint-driven deployment and autonomic management"};
  app.require_subcommand(1);

  std::string goal_file, ddd_file, from_file, to_file, scenario_file;
  std::string out_dir = ".", out_file, log_file, status_file, reload_file;
  int max_solutions = 1;
  int64_t ticks = 10;
  int64_t reload_at = 0;
  uint64_t seed = 0;

  CLI::App* check = app.add_subcommand("check", "parse and validate a goal");
  check->add_option("goal", goal_file, "Deladas goal file (.dls)")->required();

  CLI::App* solve = app.add_subcommand("solve", "solve a goal into DDDs");
  solve->add_option("goal", goal_file, "Deladas goal file (.dls)")->required();
  solve->add_option("--max-solutions", max_solutions, "solutions to emit");
  solve->add_option("--seed", seed, "search tie-break seed");
  solve->add_option("--out", out_dir, "output directory for DDD files");

  CLI::App* verify =
      app.add_subcommand("verify", "check a DDD against a goal's constraints");
  verify->add_option("goal", goal_file, "Deladas goal file (.dls)")->required();
  verify->add_option("ddd", ddd_file, "deployment description (.ddd.json)")
      ->required();

  CLI::App* diff =
      app.add_subcommand("diff", "compute a reconfiguration plan between DDDs");
  diff->add_option("from", from_file, "source DDD")->required();
  diff->add_option("to", to_file, "target DDD")->required();
  diff->add_option("--out", out_file, "write plan JSON here instead of stdout");

  CLI::App* run = app.add_subcommand(
      "run", "deploy a goal and run the autonomic loop over a scenario");
  run->add_option("goal", goal_file, "Deladas goal file (.dls)")->required();
  run->add_option("--scenario", scenario_file, "scenario file (.scenario.json)");
  run->add_option("--ticks", ticks, "logical ticks to simulate");
  run->add_option("--seed", seed, "search tie-break seed");
  run->add_option("--log", log_file, "write the run log here instead of stdout");
  run->add_option("--out", out_dir, "directory for the final DDD");
  run->add_option("--status-json", status_file, "write final engine status JSON");
  run->add_option("--reload-goal", reload_file,
                  "replace the goal with this file mid-run");
  run->add_option("--reload-at", reload_at,
                  "tick at which --reload-goal takes effect");

  out_dir.clear();  // run only writes a final DDD when --out is given
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (check->parsed()) return cmd_check(goal_file);
    if (solve->parsed())
      return cmd_solve(goal_file, max_solutions, seed,
                       out_dir.empty() ? "." : out_dir);
    if (verify->parsed()) return cmd_verify(goal_file, ddd_file);
    if (diff->parsed()) return cmd_diff(from_file, to_file, out_file);
    if (run->parsed())
      return cmd_run(goal_file, scenario_file, ticks, seed, log_file, out_dir,
                     status_file, reload_file, reload_at);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
