#pragma once

// Command-line front end: parameter grids in, CSV or JSON-lines tables out.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rtn/ensemble.hpp"

namespace rtn::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kBudgetError = 2, kPartialFailure = 3 };

enum class Format { Csv, JsonLines };

/// Default memory budget when neither --budget-mem-mb nor the environment sets one.
inline constexpr double kDefaultBudgetMb = 1024.0;
/// Environment variable holding the default memory budget in MB.
inline constexpr const char* kBudgetEnv = "RTN_BUDGET_MEM_MB";
/// Version of every table schema written by the CLI.
inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string subcommand;
  std::vector<int> grid_N;
  std::vector<int> grid_d{2};
  std::vector<int> grid_chi;
  std::vector<int> grid_k{2};
  std::vector<int> grid_L;
  std::vector<double> grid_gamma;
  std::vector<Boundary> boundaries{Boundary::OBC};
  Geometry geometry = Geometry::Chain;
  std::optional<std::uint64_t> seed;
  std::int64_t samples = 0;
  std::string out;  ///< empty or "-" for stdout
  std::string hist_out;
  std::string samples_out;
  std::string ks_samples;
  Format format = Format::Csv;
  double budget_mb = kDefaultBudgetMb;
  int max_k = 6;
  int threads = 0;
  std::string quantity = "ipr";
  std::string family = "scaling";
  std::string table = "curves";
  bool fit_a = false;
  bool analytic_continuation = false;
  int curve_points = 200;
  double w_min = 1e-4;
  double w_max = 1e2;

  /// Throws InvalidArgument when the grid is empty or a sampling run has no seed.
  void validate() const;
};

/// Parses argv into a config. Returns nullopt after printing help or an error;
/// `exit_code` then holds the process exit code.
std::optional<RunConfig> parse(int argc, const char* const* argv, std::ostream& out,
                               std::ostream& err, int& exit_code);

int cmd_ipr_exact(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_contract(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_dist(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Dispatches on cfg.subcommand; `out` is used when cfg.out is empty.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);
/// parse + run.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Version string baked in at configure time.
const char* version();

}  // namespace rtn::cli
