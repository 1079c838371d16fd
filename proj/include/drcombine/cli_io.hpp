#pragma once

// CSV ingestion, run configuration and report emission behind the
// drcombine command-line tool.

#include "drcombine/core_types.hpp"
#include "drcombine/variance.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace drcombine {

struct ColumnMapping {
  std::string in_a = "i_a";
  std::string in_b = "i_b";
  std::string weight = "d_a";
  std::string treatment = "t";
  std::string outcome = "y";
  // Empty: every column not named above, in file order.
  std::vector<std::string> covariates;

  // Throws ConfigError on repeated names.
  void check() const;
};

struct Standardization {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> sd;
};

struct IngestResult {
  CombinedDataset dataset;
  std::vector<std::string> covariate_names;  // without the intercept
  std::optional<Standardization> transform;
};

// Parses a headered CSV; empty cells are absent values. Non-binary covariate
// columns are centred and scaled over all rows when standardize is set. The
// intercept column is prepended. Throws DataError with the line number.
IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMapping& mapping,
                        bool standardize, OutcomeKind outcome_kind,
                        std::optional<double> pop_size = std::nullopt);

// Writes records back in the ingest layout with 17 significant digits.
void write_dataset_csv(const std::filesystem::path& path, const CombinedDataset& dataset,
                       const std::vector<std::string>& covariate_names,
                       const ColumnMapping& mapping = {});

enum class Mode { estimate, simulate, cv_trace };

struct RunConfig {
  Mode mode = Mode::estimate;
  std::filesystem::path input;
  std::filesystem::path out_dir = ".";
  ColumnMapping columns;
  OutcomeKind outcome_kind = OutcomeKind::continuous;
  Parameterization parameterization = Parameterization::conditional;
  std::optional<double> pop_size;
  PenaltyConfig penalty;
  bool penalized = true;
  bool standardize = false;
  std::vector<EstimatorKind> estimators;
  std::optional<std::uint64_t> seed;
  std::string case_id;
  std::size_t reps = 100;
  int jobs = 1;
  bool desk_scale = false;
  std::vector<Eigen::Index> oracle_columns;
  // Candidate lambdas; empty selects the default grid, one value fixes it.
  std::vector<double> grid_eta;
  std::vector<double> grid_mu;
};

// Reads a JSON config file into base. Throws ConfigError on unknown keys or
// bad values.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::vector<EstimatorKind> parse_estimator_list(const std::string& list);

void run_estimate(const RunConfig& config);
void run_simulate(const RunConfig& config);
void run_cv_trace(const RunConfig& config);

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Full command line: parses, runs, reports errors on stderr, returns the exit
// code.
int run_cli(int argc, const char* const* argv);

}  // namespace drcombine
