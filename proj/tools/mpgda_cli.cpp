#include "mpgda/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;

mpgda::ExperimentConfig load(const std::string &config_path, const std::vector<std::string> &sets,
                             const std::string &out) {
  mpgda::KeyValues kv;
  if (!config_path.empty()) {
    kv = mpgda::read_config_file(config_path);
  }
  for (const auto &s : sets) {
    kv.push_back(mpgda::parse_assignment(s));
  }
  if (!out.empty()) {
    kv.emplace_back("output_dir", out);
  }
  return mpgda::make_config(kv);
}

int cmd_run(const mpgda::ExperimentConfig &cfg) {
  const auto res = mpgda::run_experiment(cfg);
  for (const auto &r : res.per_seed) {
    std::printf("%-4s seed %-4llu %-18s obj %.6f iters %d G %.3e%s\n", r.algorithm.c_str(),
                static_cast<unsigned long long>(r.seed), mpgda::to_string(r.status).c_str(),
                r.objective, r.iterations, r.final_G, r.message.empty() ? "" : "  (failed)");
    if (!r.message.empty()) {
      std::fprintf(stderr, "  %s\n", r.message.c_str());
    }
  }
  for (const auto &a : res.aggregate) {
    std::printf("aggregate %-4s runs %d obj %.6f iters %.1f time %.3fs converged %.0f%%\n",
                a.algorithm.c_str(), a.runs, a.objective, a.iterations, a.time,
                100.0 * a.converged_fraction);
  }
  std::printf("results written to %s\n", cfg.output_dir.c_str());
  return res.any_failure ? kExitSolver : kExitOk;
}

int cmd_gradcheck(const mpgda::ExperimentConfig &cfg) {
  bool ok = true;
  for (const auto &row : mpgda::run_gradcheck(cfg)) {
    const bool pass = row.max_rel_error <= mpgda::kGradcheckTol;
    ok = ok && pass;
    std::printf("%s %s max_rel_error %.3e\n", pass ? "PASS" : "FAIL", row.which.c_str(),
                row.max_rel_error);
  }
  return ok ? kExitOk : kExitSolver;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Manifold proximal gradient descent-ascent experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out;

  auto *run = app.add_subcommand("run", "run an experiment");
  auto *grad = app.add_subcommand("gradcheck", "finite-difference check of the configured problem");
  for (auto *sub : {run, grad}) {
    sub->add_option("--config", config_path, "key=value file, or a results file to replay");
    sub->add_option("--set", sets, "override, key=value (repeatable)");
    sub->add_option("--out", out, "output directory");
  }

  std::vector<std::string> traces;
  std::string plot_out = "plots";
  auto *plot = app.add_subcommand("plotdata", "convert trace CSVs into plot columns");
  plot->add_option("traces", traces, "trace CSV files")->required();
  plot->add_option("--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*plot) {
      mpgda::write_plot_data(traces, plot_out);
      std::printf("wrote %s/plot_iter.dat and %s/plot_time.dat\n", plot_out.c_str(),
                  plot_out.c_str());
      return kExitOk;
    }
    const auto cfg = load(config_path, sets, out);
    return *run ? cmd_run(cfg) : cmd_gradcheck(cfg);
  } catch (const mpgda::SubproblemFailure &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  } catch (const mpgda::Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
}
