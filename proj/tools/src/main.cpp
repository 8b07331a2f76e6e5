#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "runner.hpp"
#include "warpbox/scalar.hpp"

using warpbox::cli::Algorithm;
using warpbox::cli::Arith;
using warpbox::cli::Command;
using warpbox::cli::OutputFormat;
using warpbox::cli::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"warpbox: DTW and geometric edit distance, quadratic and boxed subquadratic"};
  app.require_subcommand(1);

  RunConfig config;
  std::string algorithm = "subquadratic";
  std::string arith = "int";
  std::string output = "json";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--algorithm", algorithm, "quadratic | subquadratic")
        ->check(CLI::IsMember({"quadratic", "subquadratic"}));
    cmd->add_option("--g", config.g, "box side for the subquadratic algorithm (2..13)");
    cmd->add_option("--metric", config.metric, "abs1d | l1 | linf");
    cmd->add_option("--arith", arith, "int | rational | double")
        ->check(CLI::IsMember({"int", "rational", "double"}));
    cmd->add_option("--mode", config.mode, "direct | faithful | faithful-unpruned");
    cmd->add_option("--output", output, "json | tsv")->check(CLI::IsMember({"json", "tsv"}));
    cmd->add_option("--threads", config.threads, "wavefront threads (default 1)");
    cmd->add_option("--seed", config.seed, "seed for generated instances");
  };

  CLI::App* dtw = app.add_subcommand("dtw", "dynamic time warping distance");
  dtw->add_option("input", config.input_path, "input file")->required();
  dtw->add_flag("--traceback", config.traceback, "also report an optimal coupling");
  dtw->add_option("--cache", config.cache_path, "binary preprocessing cache path");
  add_common(dtw);

  CLI::App* ged = app.add_subcommand("ged", "geometric edit distance");
  ged->add_option("input", config.input_path, "input file")->required();
  ged->add_option("--rho", config.rho, "gap penalty (required)");
  ged->add_flag("--traceback", config.traceback, "also report an optimal matching");
  ged->add_option("--cache", config.cache_path, "binary preprocessing cache path");
  add_common(ged);

  CLI::App* bench = app.add_subcommand("bench", "run both algorithms, report work units");
  bench->add_option("input", config.input_path, "input file (optional with --random-n)");
  bench->add_option("--random-n", config.random_len, "generate a random instance of this length");
  bench->add_option("--rho", config.rho, "benchmark GED instead of DTW");
  add_common(bench);

  CLI::App* selftest = app.add_subcommand("selftest", "oracle-equivalence and invariant suites");
  selftest->add_option("--instances", config.selftest_instances,
                       "random instances for the equivalence suite");
  selftest->add_flag("--quiet", config.quiet, "suppress per-suite progress lines");
  add_common(selftest);

  CLI11_PARSE(app, argc, argv);

  if (dtw->parsed()) config.command = Command::Dtw;
  if (ged->parsed()) {
    config.command = Command::Ged;
    config.rho_given = ged->count("--rho") > 0;
  }
  if (bench->parsed()) {
    config.command = Command::Bench;
    config.rho_given = bench->count("--rho") > 0;
  }
  if (selftest->parsed()) config.command = Command::Selftest;
  config.algorithm = algorithm == "quadratic" ? Algorithm::Quadratic : Algorithm::Subquadratic;
  config.arith = arith == "int"        ? Arith::Int64
                 : arith == "rational" ? Arith::RationalExact
                                       : Arith::Float64;
  config.output = output == "tsv" ? OutputFormat::Tsv : OutputFormat::Json;

  try {
    nlohmann::json report = warpbox::cli::run_report(config);
    if (config.output == OutputFormat::Tsv) {
      std::cout << warpbox::cli::report_to_tsv(report);
    } else {
      std::cout << report.dump(2) << "\n";
    }
    if (config.command == Command::Selftest && !report.value("passed", false)) return 2;
    return 0;
  } catch (const warpbox::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const warpbox::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
