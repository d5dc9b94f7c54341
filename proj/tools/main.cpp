#include "conecrit/checkpoint.hpp"
#include "conecrit/runner.hpp"
#include "conecrit/scenario.hpp"
#include "conecrit/verify.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace conecrit;

namespace {

int run_command(const std::string& scenario_path, const std::string& output, int workers) {
  Scenario sc = load_scenario(scenario_path);
  RunOptions opt;
  opt.output = output;
  opt.workers = workers;
  opt.log = &std::cerr;
  const RunResult res = run_scenario(sc, opt);
  for (const auto& s : res.stages) {
    std::cout << s.name << ": " << s.status;
    if (!s.message.empty()) std::cout << " (" << s.message << ")";
    std::cout << '\n';
  }
  std::cout << "artifacts in " << res.directory.string() << '\n';
  return res.ok() ? 0 : 1;
}

int export_command(const std::string& checkpoint, const std::vector<double>& levels, const std::string& output) {
  const Solution s = load_solution(checkpoint);
  const fs::path cp(checkpoint);
  const fs::path dir = output.empty() ? cp.parent_path() / "contours" : fs::path(output);
  for (const auto& f : export_contours(s, levels, dir, cp.stem().string())) {
    if (f.polylines == 0) std::cerr << "warning: level " << f.level << " is empty\n";
    std::cout << f.path.string() << "  level " << f.level << "  length " << f.length << "  polylines "
              << f.polylines << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical points of the Allen-Cahn energy on elliptic cones"};
  app.require_subcommand(1);
  app.fallthrough();
  int workers = 0;
  std::string output;
  app.add_option("--workers", workers, "Worker threads for assembly (default: scenario value)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--output", output, "Output directory");

  auto* run = app.add_subcommand("run", "Run a scenario file");
  std::string scenario;
  run->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);

  app.add_subcommand("verify", "Check the reference oracles");

  auto* exp = app.add_subcommand("export-contours", "Write level lines of a solution checkpoint");
  std::string checkpoint;
  std::vector<double> levels{-0.5, 0.0, 0.5};
  exp->add_option("checkpoint", checkpoint, "Solution checkpoint")->required()->check(CLI::ExistingFile);
  exp->add_option("--levels", levels, "Level values")->expected(1, -1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(scenario, output, workers);
    if (exp->parsed()) return export_command(checkpoint, levels, output);
    return print_checks(std::cout, oracle_checks()) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
