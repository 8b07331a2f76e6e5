#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace warpbox::cli {

enum class Command { Dtw, Ged, Bench, Selftest };
enum class Algorithm { Quadratic, Subquadratic };
enum class Arith { Int64, RationalExact, Float64 };
enum class OutputFormat { Json, Tsv };

struct RunConfig {
  Command command = Command::Dtw;
  Algorithm algorithm = Algorithm::Subquadratic;
  std::string mode = "direct";  // direct | faithful | faithful-unpruned
  int g = 4;
  bool rho_given = false;
  std::string rho = "0";
  std::string metric = "abs1d";  // abs1d | l1 | linf
  Arith arith = Arith::Int64;
  bool traceback = false;
  OutputFormat output = OutputFormat::Json;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string cache_path;
  std::string input_path;
  int random_len = 0;  // bench/selftest: generate instead of reading a file
  int selftest_instances = 60;
  bool quiet = false;
};

// Executes the configured command and returns the report. Throws InputError
// for configuration/input problems and InternalError for invariant failures
// (a failed selftest included).
nlohmann::json run_report(const RunConfig& config);

std::string report_to_tsv(const nlohmann::json& report);

}  // namespace warpbox::cli
