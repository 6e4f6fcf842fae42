// Command-line front end: one spec file per run.
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "carpetslice/experiment.hpp"

namespace cs = carpetslice;

int main(int argc, char** argv) {
  CLI::App app{"Exact carpet slicing experiments"};
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t budget = 0, seed = 0;
  unsigned precision = 0;

  CLI::App* run = app.add_subcommand("run", "Run one experiment spec and write result.json plus a CSV table");
  run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (default: the spec's output field)");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* budget_opt = run->add_option("--budget", budget, "Node budget for cover descents")->check(CLI::PositiveNumber);
  auto* prec_opt = run->add_option("--precision", precision, "Precision cap in bits")->check(CLI::Range(64u, 1u << 20));
  auto* seed_opt = run->add_option("--seed", seed, "Override the spec seed");

  CLI::App* check = app.add_subcommand("check", "Parse a spec and print its normalized form");
  check->add_option("--spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  cs::ExperimentSpec spec;
  try {
    spec = cs::parse_spec(spec_path);
  } catch (const cs::SpecError& e) {
    std::cerr << "spec error " << e.located() << "\n";
    return 2;
  }
  if (check->parsed()) {
    std::cout << cs::serialize_spec(spec);
    return 0;
  }

  cs::RunOptions opts;
  opts.workers = workers;
  if (*budget_opt) opts.budget = budget;
  if (*prec_opt) opts.precision = precision;
  if (*seed_opt) opts.seed = seed;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  else if (spec.output()) opts.out_dir = std::filesystem::path(spec_path).parent_path() / *spec.output();

  try {
    const cs::RunResult r = cs::run_experiment(spec, opts);
    std::cout << cs::to_string(spec.kind) << ": " << cs::to_string(r.outcome);
    if (r.result["summary"].contains("error")) std::cout << " (" << r.result["summary"]["error"]["message"].get<std::string>() << ")";
    std::cout << "\n";
    if (opts.out_dir.empty()) std::cout << r.result.dump(2) << "\n" << r.csv;
    else std::cout << "wrote " << (opts.out_dir / "result.json").string() << " and " << (opts.out_dir / r.csv_name).string() << "\n";
    return r.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
