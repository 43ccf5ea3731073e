#pragma once

#include "mpgda/problems.hpp"
#include "mpgda/solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mpgda {

class ConfigError : public ParameterError {
public:
  using ParameterError::ParameterError;
};

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  std::string experiment = "analytic";
  std::string algorithm = "pa";
  std::vector<std::uint64_t> seeds{1};
  // r for FSPCA, p for SSC.
  int rank = 2;
  double mu = 0.1;
  int N = 200;
  int dim = 50;
  std::string credit_path;
  std::string group_column = "SEX";
  std::string output_dir = "results";
  bool snapshot_trace = false;
  int gradcheck_samples = 20;
  bool corrupt_gradient = false;
  PASettings pa;
  PGASettings pga;
  // nullopt: 0.9 times the admissible bound of the instance.
  std::optional<double> pga_rho;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Defaults for an experiment, then every entry applied in order. Unknown keys
/// and malformed values raise ConfigError; setting ranges are validated.
ExperimentConfig make_config(const KeyValues &entries);

/// Every key with its resolved value; make_config(config_entries(c)) == c.
KeyValues config_entries(const ExperimentConfig &config);

/// Reads key=value lines ('#' starts a comment, '#cfg key=value' lines are
/// embedded config), or a results JSON file carrying a "config" object.
KeyValues read_config_file(const std::string &path);

/// "key=value" -> pair; throws ConfigError when '=' is missing.
std::pair<std::string, std::string> parse_assignment(const std::string &text);

/// Seed lists: "1,2,5" or ranges "1-20", mixed.
std::vector<std::uint64_t> parse_seeds(const std::string &text);

struct ProblemInstance {
  MinimaxProblem problem;
  ManifoldPoint x0;
  Vector y0;
  // Reference point for D_k, when one is known.
  std::optional<Vector> x_ref;
  std::optional<Vector> y_ref;
};

ProblemInstance build_instance(const ExperimentConfig &config, std::uint64_t seed);

PGASettings resolved_pga(const ExperimentConfig &config, const MinimaxProblem &problem);

struct SeedResult {
  std::uint64_t seed = 0;
  std::string algorithm;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;
  double objective = 0.0;
  int iterations = 0;
  double time = 0.0;
  double final_G = 0.0;
  std::optional<double> final_D;
  bool ledger_checked = false;
  bool ledger_ok = true;
};

struct Aggregate {
  std::string algorithm;
  int runs = 0;
  double objective = 0.0;
  double iterations = 0.0;
  double time = 0.0;
  double converged_fraction = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedResult> per_seed;
  std::vector<Aggregate> aggregate;
  bool any_failure = false;
};

/// Runs every (algorithm, seed) pair, writes traces, results CSV and JSON
/// into config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig &config, bool write_files = true);

std::vector<Aggregate> aggregate_results(const std::vector<SeedResult> &rows);

/// Trace CSV with embedded config lines.
void write_trace_csv(const std::string &path, const ExperimentConfig &config,
                     const SolveOutcome &outcome, const std::vector<double> &D);

struct GradcheckRow {
  std::string which;
  double max_rel_error = 0.0;
};

std::vector<GradcheckRow> run_gradcheck(const ExperimentConfig &config);

inline constexpr double kGradcheckTol = 1e-5;

/// Writes <out>/plot_iter.dat and <out>/plot_time.dat from one or more trace
/// CSVs, aligned by k. Uses D_k, or G_beta when a trace has no D_k column data.
void write_plot_data(const std::vector<std::string> &trace_paths, const std::string &out_dir);

inline constexpr double kPlotFloor = 1e-16;

} // namespace mpgda
