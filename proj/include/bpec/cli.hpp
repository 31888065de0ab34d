#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bpec::cli {

enum ExitCode : int
{
  kOk = 0,
  kNumerical = 1,
  kConfig = 2,
  kDataFormat = 3,
  kVerifyFailed = 4,
};

/// Settings shared by all subcommands. A JSON config file fills these first;
/// command-line flags then override individual fields.
struct RunConfig
{
  std::string model;
  int L = 1;
  int sweep = 33;
  std::optional<double> lambda;
  std::vector<double> rates;
  double rate_scale = 1.0;
  std::uint64_t slots = 200'000;
  std::uint64_t seed = 1;
  std::string out;
  std::string scheduler = "maxweight";
  std::string dist;
  std::string witness;
  std::string sandwich_out;
  std::string trace;
  std::string slot_csv;
  int Lmax = 4;
  std::optional<int> horizon;
  int samples = 256;
  bool exhaustive = false;
  double backlog_bound = 500;
  std::string poison_fallback = "idle";
};

/// Overlay the keys of a JSON config document onto `cfg`.
void apply_config_json(const std::string& text, RunConfig& cfg);

/// Entry point behind the executable; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace bpec::cli
