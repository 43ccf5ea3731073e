#include "mpgda/experiment.hpp"

#include "mpgda/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace mpgda {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kExperiments = {"analytic", "fspca-synthetic", "fspca-credit",
                                            "ssc-synthetic"};
const std::set<std::string> kAlgorithms = {"pa", "pga", "both"};

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (v.empty() || used != v.size()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return d;
}

int to_int(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (v.empty() || used != v.size() || i < INT32_MIN || i > INT32_MAX) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return static_cast<int>(i);
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    return false;
  }
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

struct KeySpec {
  std::function<void(ExperimentConfig &, const std::string &, const std::string &)> set;
  std::function<std::string(const ExperimentConfig &)> get;
};

template <class T> KeySpec real_key(T ExperimentConfig::*sub, double T::*field) {
  return {[=](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.*sub.*field = to_double(k, v);
          },
          [=](const ExperimentConfig &c) { return fmt(c.*sub.*field); }};
}

template <class T> KeySpec int_key(T ExperimentConfig::*sub, int T::*field) {
  return {[=](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.*sub.*field = to_int(k, v);
          },
          [=](const ExperimentConfig &c) { return std::to_string(c.*sub.*field); }};
}

std::string join_seeds(const std::vector<std::uint64_t> &seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    s += (i ? "," : "") + std::to_string(seeds[i]);
  }
  return s;
}

const std::vector<std::pair<std::string, KeySpec>> &key_table() {
  static const std::vector<std::pair<std::string, KeySpec>> table = [] {
    using C = ExperimentConfig;
    std::vector<std::pair<std::string, KeySpec>> t;
    t.push_back({"experiment",
                 {[](C &c, const std::string &, const std::string &v) { c.experiment = v; },
                  [](const C &c) { return c.experiment; }}});
    t.push_back({"algorithm",
                 {[](C &c, const std::string &, const std::string &v) { c.algorithm = v; },
                  [](const C &c) { return c.algorithm; }}});
    t.push_back({"seeds",
                 {[](C &c, const std::string &, const std::string &v) { c.seeds = parse_seeds(v); },
                  [](const C &c) { return join_seeds(c.seeds); }}});
    const KeySpec rank{[](C &c, const std::string &k, const std::string &v) {
                         c.rank = to_int(k, v);
                       },
                       [](const C &c) { return std::to_string(c.rank); }};
    t.push_back({"r", rank});
    t.push_back({"p", rank});
    t.push_back({"mu",
                 {[](C &c, const std::string &k, const std::string &v) { c.mu = to_double(k, v); },
                  [](const C &c) { return fmt(c.mu); }}});
    t.push_back({"N",
                 {[](C &c, const std::string &k, const std::string &v) { c.N = to_int(k, v); },
                  [](const C &c) { return std::to_string(c.N); }}});
    t.push_back({"dim",
                 {[](C &c, const std::string &k, const std::string &v) { c.dim = to_int(k, v); },
                  [](const C &c) { return std::to_string(c.dim); }}});
    t.push_back({"credit_path",
                 {[](C &c, const std::string &, const std::string &v) { c.credit_path = v; },
                  [](const C &c) { return c.credit_path; }}});
    t.push_back({"group_column",
                 {[](C &c, const std::string &, const std::string &v) { c.group_column = v; },
                  [](const C &c) { return c.group_column; }}});
    t.push_back({"output_dir",
                 {[](C &c, const std::string &, const std::string &v) { c.output_dir = v; },
                  [](const C &c) { return c.output_dir; }}});
    t.push_back({"snapshot_trace",
                 {[](C &c, const std::string &k, const std::string &v) {
                    c.snapshot_trace = to_bool(k, v);
                  },
                  [](const C &c) { return std::string(c.snapshot_trace ? "true" : "false"); }}});
    t.push_back({"gradcheck_samples",
                 {[](C &c, const std::string &k, const std::string &v) {
                    c.gradcheck_samples = to_int(k, v);
                  },
                  [](const C &c) { return std::to_string(c.gradcheck_samples); }}});
    t.push_back({"corrupt_gradient",
                 {[](C &c, const std::string &k, const std::string &v) {
                    c.corrupt_gradient = to_bool(k, v);
                  },
                  [](const C &c) { return std::string(c.corrupt_gradient ? "true" : "false"); }}});

    t.push_back({"pa.c1", real_key(&C::pa, &PASettings::c1)});
    t.push_back({"pa.eta", real_key(&C::pa, &PASettings::eta)});
    t.push_back({"pa.gamma0", real_key(&C::pa, &PASettings::gamma0)});
    t.push_back({"pa.xi0", real_key(&C::pa, &PASettings::xi0)});
    t.push_back({"pa.theta", real_key(&C::pa, &PASettings::theta)});
    t.push_back({"pa.tau1", real_key(&C::pa, &PASettings::tau1)});
    t.push_back({"pa.tau2", real_key(&C::pa, &PASettings::tau2)});
    t.push_back({"pa.l_min", real_key(&C::pa, &PASettings::l_min)});
    t.push_back({"pa.l_max", real_key(&C::pa, &PASettings::l_max)});
    t.push_back({"pa.T", int_key(&C::pa, &PASettings::inner_steps)});
    t.push_back({"pa.delta0", real_key(&C::pa, &PASettings::delta0)});
    t.push_back({"pa.eps", real_key(&C::pa, &PASettings::eps)});
    t.push_back({"pa.max_outer", int_key(&C::pa, &PASettings::max_outer)});
    t.push_back({"pa.max_backtracks", int_key(&C::pa, &PASettings::max_backtracks)});

    t.push_back({"pga.c1", real_key(&C::pga, &PGASettings::c1)});
    t.push_back({"pga.eta", real_key(&C::pga, &PGASettings::eta)});
    t.push_back({"pga.kappa", real_key(&C::pga, &PGASettings::kappa)});
    t.push_back({"pga.rho",
                 {[](C &c, const std::string &k, const std::string &v) {
                    if (v == "auto") {
                      c.pga_rho.reset();
                    } else {
                      c.pga_rho = to_double(k, v);
                    }
                  },
                  [](const C &c) { return c.pga_rho ? fmt(*c.pga_rho) : std::string("auto"); }}});
    t.push_back({"pga.l_min", real_key(&C::pga, &PGASettings::l_min)});
    t.push_back({"pga.l_max", real_key(&C::pga, &PGASettings::l_max)});
    t.push_back({"pga.eps", real_key(&C::pga, &PGASettings::eps)});
    t.push_back({"pga.max_outer", int_key(&C::pga, &PGASettings::max_outer)});
    t.push_back({"pga.max_backtracks", int_key(&C::pga, &PGASettings::max_backtracks)});
    return t;
  }();
  return table;
}

const KeySpec *find_key(const std::string &key) {
  for (const auto &[name, spec] : key_table()) {
    if (name == key) {
      return &spec;
    }
  }
  return nullptr;
}

ExperimentConfig defaults_for(const std::string &experiment, std::optional<int> rank,
                              std::optional<int> N) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "analytic") {
    c.seeds = {1};
    c.pa.gamma0 = 0.005;
    c.pa.xi0 = 1.0;
    c.pa.theta = 1.5;
    c.pa.inner_steps = 1;
    c.pa.eps = 1e-10;
    c.pa.max_outer = 1000;
    c.pga.rho = 0.2;
    c.pga_rho = 0.2;
    c.pga.kappa = 1e16;
    c.pga.eta = 0.5;
    c.pga.l_min = 1e-16;
    c.pga.l_max = 1e8;
    c.pga.eps = 1e-10;
    c.pga.max_outer = 8000;
  } else if (experiment == "fspca-synthetic" || experiment == "fspca-credit") {
    c.rank = rank.value_or(2);
    c.seeds = parse_seeds("1-20");
    c.pa.gamma0 = 1e-6;
    c.pa.xi0 = 4.0 * std::sqrt(static_cast<double>(c.rank)) * 1e4;
    c.pa.theta = 1.5;
    c.pa.inner_steps = 15;
    c.pa.eps = 1e-6;
    c.pa.max_outer = 1000;
    c.pga.eps = 1e-6;
    c.pga.max_outer = 1000;
  } else if (experiment == "ssc-synthetic") {
    c.rank = rank.value_or(2);
    c.N = N.value_or(200);
    c.seeds = {1};
    c.pa.gamma0 = 1e-5;
    c.pa.xi0 = std::sqrt(static_cast<double>(c.rank)) * c.N * c.N;
    c.pa.theta = 2.0;
    c.pa.inner_steps = 3;
    c.pa.eps = 1e-4;
    c.pa.max_outer = 1000;
    c.pga.eps = 1e-4;
    c.pga.max_outer = 1000;
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return c;
}

void validate_config(const ExperimentConfig &c) {
  if (!kExperiments.count(c.experiment)) {
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  }
  if (!kAlgorithms.count(c.algorithm)) {
    throw ConfigError("algorithm must be pa, pga or both");
  }
  if (c.seeds.empty()) {
    throw ConfigError("seed list is empty");
  }
  if (c.rank < 1) {
    throw ConfigError("r/p must be >= 1");
  }
  if (!(c.mu >= 0.0)) {
    throw ConfigError("mu must be >= 0");
  }
  if (c.N < 1 || c.dim < 1) {
    throw ConfigError("N and dim must be >= 1");
  }
  if (c.gradcheck_samples < 1) {
    throw ConfigError("gradcheck_samples must be >= 1");
  }
  if (c.experiment == "fspca-credit" && c.credit_path.empty()) {
    throw ConfigError("fspca-credit needs credit_path");
  }
  try {
    c.pa.validate();
    // rho is checked against the instance's L_y at run time.
    PGASettings probe = c.pga;
    probe.rho = 1e-12;
    probe.validate(1.0);
  } catch (const ParameterError &e) {
    throw ConfigError(e.what());
  }
}

} // namespace

std::pair<std::string, std::string> parse_assignment(const std::string &text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("expected key=value, got '" + text + "'");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

std::vector<std::uint64_t> parse_seeds(const std::string &text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  auto num = [&](const std::string &s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (s.empty() || used != s.size() || s[0] == '-') {
      throw ConfigError("bad seed '" + s + "'");
    }
    return static_cast<std::uint64_t>(v);
  };
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      continue;
    }
    const auto dash = item.find('-', 1);
    if (dash != std::string::npos) {
      const auto a = num(trim(item.substr(0, dash)));
      const auto b = num(trim(item.substr(dash + 1)));
      if (b < a || b - a > 100000) {
        throw ConfigError("bad seed range '" + item + "'");
      }
      for (auto s = a; s <= b; ++s) {
        out.push_back(s);
      }
    } else {
      out.push_back(num(item));
    }
  }
  return out;
}

ExperimentConfig make_config(const KeyValues &entries) {
  std::string experiment = "analytic";
  std::optional<int> rank;
  std::optional<int> N;
  for (const auto &[k, v] : entries) {
    if (!find_key(k)) {
      throw ConfigError("unknown config key '" + k + "'");
    }
    if (k == "experiment") {
      experiment = v;
    } else if (k == "r" || k == "p") {
      rank = to_int(k, v);
    } else if (k == "N") {
      N = to_int(k, v);
    }
  }
  ExperimentConfig c = defaults_for(experiment, rank, N);
  for (const auto &[k, v] : entries) {
    find_key(k)->set(c, k, v);
  }
  validate_config(c);
  return c;
}

KeyValues config_entries(const ExperimentConfig &config) {
  KeyValues out;
  for (const auto &[name, spec] : key_table()) {
    if (name == "p") {
      continue;
    }
    out.emplace_back(name, spec.get(config));
  }
  return out;
}

KeyValues read_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  KeyValues out;
  if (trim(text).rfind('{', 0) == 0) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) {
      throw ConfigError("JSON file has no config object: " + path);
    }
    for (const auto &[k, v] : j["config"].items()) {
      out.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
    return out;
  }
  std::stringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    line = trim(line);
    if (line.rfind("#cfg ", 0) == 0) {
      out.push_back(parse_assignment(line.substr(5)));
      continue;
    }
    if (line.empty() || line[0] == '#') {
      continue;
    }
    // Data rows of an embedded-config CSV carry no '='.
    if (line.find('=') == std::string::npos && line.find(',') != std::string::npos) {
      continue;
    }
    out.push_back(parse_assignment(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instances

ProblemInstance build_instance(const ExperimentConfig &c, std::uint64_t seed) {
  if (c.experiment == "analytic") {
    ProblemInstance inst{analytic_problem(), {}, Vector::Constant(1, 0.3), {}, {}};
    inst.x0 = make_point(inst.problem.manifold, Eigen::Vector2d(0.8, 0.6));
    inst.x_ref = analytic_stationary_x();
    inst.y_ref = analytic_stationary_y();
    return inst;
  }
  if (c.experiment == "fspca-synthetic" || c.experiment == "fspca-credit") {
    std::vector<Matrix> groups;
    if (c.experiment == "fspca-synthetic") {
      groups = gen_fspca_synthetic(seed);
    } else {
      CreditCsvOptions opts;
      opts.group_column = c.group_column;
      groups = load_credit_csv(c.credit_path, opts);
    }
    auto prob = fspca_problem(groups, c.rank, c.mu);
    const auto n = static_cast<Eigen::Index>(groups.size());
    ProblemInstance inst{std::move(prob), {}, Vector::Constant(n, 1.0 / n), {}, {}};
    inst.x0 = random_point(inst.problem.manifold, seed + 1000);
    return inst;
  }
  const Matrix W = gen_ssc_synthetic(c.N, c.dim, seed);
  ProblemInstance inst{ssc_problem(W, c.rank, c.mu), {}, Vector::Zero(c.N * c.N), {}, {}};
  inst.x0 = ssc_eigen_init(inst.problem, W, c.rank);
  return inst;
}

PGASettings resolved_pga(const ExperimentConfig &c, const MinimaxProblem &problem) {
  PGASettings s = c.pga;
  s.rho = c.pga_rho ? *c.pga_rho : 0.9 * pga_rho_bound(problem.lipschitz_y, s.kappa);
  s.snapshots = c.snapshot_trace;
  return s;
}

// ---------------------------------------------------------------------------
// Output

namespace {

void write_config_lines(std::ostream &os, const ExperimentConfig &c) {
  for (const auto &[k, v] : config_entries(c)) {
    os << "#cfg " << k << "=" << v << "\n";
  }
}

std::string fmt_ms(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", seconds);
  return buf;
}

std::vector<double> distances(const ProblemInstance &inst, const SolveOutcome &o) {
  std::vector<double> D;
  if (!inst.x_ref) {
    return D;
  }
  for (const auto &it : o.iterates) {
    D.push_back(std::sqrt((it.x - *inst.x_ref).squaredNorm() + (it.y - *inst.y_ref).squaredNorm()));
  }
  return D;
}

} // namespace

void write_trace_csv(const std::string &path, const ExperimentConfig &config,
                     const SolveOutcome &outcome, const std::vector<double> &D) {
  std::ofstream os(path);
  if (!os) {
    throw DataError("cannot write " + path);
  }
  write_config_lines(os, config);
  os << "schema_version,k,objective,primal_measure,dual_measure,G_beta,D_k,beta,backtracks,"
        "inner_iters,elapsed,flagged\n";
  for (std::size_t i = 0; i < outcome.trace.size(); ++i) {
    const auto &r = outcome.trace[i];
    os << kSchemaVersion << "," << r.k << "," << fmt(r.objective) << "," << fmt(r.primal_measure)
       << "," << fmt(r.dual_measure) << "," << fmt(r.G_beta) << ","
       << (i < D.size() ? fmt(D[i]) : std::string()) << "," << fmt(r.beta) << ","
       << r.backtracks << "," << r.inner_iters << "," << fmt_ms(r.elapsed) << ","
       << (r.flagged ? 1 : 0) << "\n";
  }
}

std::vector<Aggregate> aggregate_results(const std::vector<SeedResult> &rows) {
  std::vector<Aggregate> out;
  for (const std::string algo : {"pa", "pga"}) {
    Aggregate a;
    a.algorithm = algo;
    for (const auto &r : rows) {
      if (r.algorithm != algo) {
        continue;
      }
      ++a.runs;
      a.objective += r.objective;
      a.iterations += r.iterations;
      a.time += r.time;
      a.converged_fraction += r.status == SolveStatus::Converged ? 1.0 : 0.0;
    }
    if (a.runs == 0) {
      continue;
    }
    a.objective /= a.runs;
    a.iterations /= a.runs;
    a.time /= a.runs;
    a.converged_fraction /= a.runs;
    out.push_back(a);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig &config, bool write_files) {
  validate_config(config);
  std::vector<std::string> algos;
  if (config.algorithm != "pga") {
    algos.push_back("pa");
  }
  if (config.algorithm != "pa") {
    algos.push_back("pga");
  }
  // Fail fast on settings that depend on the instance.
  {
    const auto inst = build_instance(config, config.seeds.front());
    if (config.algorithm != "pa") {
      resolved_pga(config, inst.problem).validate(inst.problem.lipschitz_y);
    }
  }
  if (write_files) {
    fs::create_directories(config.output_dir);
  }

  ExperimentResult res;
  res.config = config;
  for (const auto &algo : algos) {
    for (const auto seed : config.seeds) {
      SeedResult row;
      row.seed = seed;
      row.algorithm = algo;
      try {
        const auto inst = build_instance(config, seed);
        const bool keep = config.snapshot_trace || inst.x_ref.has_value();
        SolveOutcome o;
        if (algo == "pa") {
          PASettings s = config.pa;
          s.snapshots = keep;
          o = run_mpgda_pa(inst.problem, inst.x0, inst.y0, s);
          if (config.snapshot_trace) {
            row.ledger_checked = true;
            row.ledger_ok = replay_descent_ledger(o, inst.problem, s).ok();
          }
        } else {
          PGASettings s = resolved_pga(config, inst.problem);
          s.snapshots = keep;
          o = run_mpgda_pga(inst.problem, inst.x0, inst.y0, s);
          if (config.snapshot_trace) {
            row.ledger_checked = true;
            row.ledger_ok = replay_descent_ledger(o, inst.problem, s).ok();
          }
        }
        const auto D = distances(inst, o);
        row.status = o.status;
        row.message = o.message;
        row.objective = inst.problem.reported_objective(o.x.data);
        row.iterations = o.trace.empty() ? 0 : o.trace.back().k;
        row.time = o.trace.empty() ? 0.0 : o.trace.back().elapsed;
        row.final_G = o.trace.empty() ? 0.0 : o.trace.back().G_beta;
        if (!D.empty()) {
          row.final_D = D.back();
        }
        if (write_files) {
          write_trace_csv((fs::path(config.output_dir) /
                           ("trace_" + algo + "_seed" + std::to_string(seed) + ".csv"))
                              .string(),
                          config, o, D);
        }
      } catch (const Error &e) {
        row.status = SolveStatus::SubproblemFailure;
        row.message = e.what();
      }
      res.any_failure = res.any_failure || row.status == SolveStatus::SubproblemFailure;
      res.per_seed.push_back(row);
    }
  }
  res.aggregate = aggregate_results(res.per_seed);
  if (!write_files) {
    return res;
  }

  const fs::path dir(config.output_dir);
  {
    std::ofstream os(dir / "results.csv");
    write_config_lines(os, config);
    os << "schema_version,experiment,algorithm,seed,status,objective,iterations,time,G_final,"
          "D_final,ledger\n";
    for (const auto &r : res.per_seed) {
      os << kSchemaVersion << "," << config.experiment << "," << r.algorithm << "," << r.seed
         << "," << to_string(r.status) << "," << fmt(r.objective) << "," << r.iterations << ","
         << fmt_ms(r.time) << "," << fmt(r.final_G) << ","
         << (r.final_D ? fmt(*r.final_D) : std::string()) << ","
         << (r.ledger_checked ? (r.ledger_ok ? "pass" : "fail") : "") << "\n";
    }
  }
  {
    std::ofstream os(dir / "aggregate.csv");
    write_config_lines(os, config);
    os << "schema_version,experiment,algorithm,runs,objective,iterations,time,converged_fraction\n";
    for (const auto &a : res.aggregate) {
      os << kSchemaVersion << "," << config.experiment << "," << a.algorithm << "," << a.runs
         << "," << fmt(a.objective) << "," << fmt(a.iterations) << "," << fmt_ms(a.time) << ","
         << fmt(a.converged_fraction) << "\n";
    }
  }
  {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto &[k, v] : config_entries(config)) {
      cfg[k] = v;
    }
    j["config"] = cfg;
    j["per_seed"] = nlohmann::ordered_json::array();
    for (const auto &r : res.per_seed) {
      nlohmann::ordered_json e;
      e["seed"] = r.seed;
      e["algorithm"] = r.algorithm;
      e["status"] = to_string(r.status);
      e["objective"] = r.objective;
      e["iterations"] = r.iterations;
      e["time"] = std::round(r.time * 1000.0) / 1000.0;
      e["G_final"] = r.final_G;
      e["D_final"] = r.final_D ? nlohmann::ordered_json(*r.final_D) : nlohmann::ordered_json();
      if (r.ledger_checked) {
        e["ledger_ok"] = r.ledger_ok;
      }
      if (!r.message.empty()) {
        e["message"] = r.message;
      }
      j["per_seed"].push_back(e);
    }
    j["aggregate"] = nlohmann::ordered_json::object();
    for (const auto &a : res.aggregate) {
      j["aggregate"][a.algorithm] = {{"runs", a.runs},
                                     {"objective", a.objective},
                                     {"iterations", a.iterations},
                                     {"time", std::round(a.time * 1000.0) / 1000.0},
                                     {"converged_fraction", a.converged_fraction}};
    }
    std::ofstream os(dir / "results.json");
    os << j.dump(2) << "\n";
  }
  return res;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

Vector random_feasible_y(const FeasibleSet &S, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector y(S.dim);
  if (S.kind == FeasibleSet::Kind::Simplex) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y[i] = -std::log(1.0 - u(rng));
    }
    return y / y.sum();
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] = S.lo + (S.hi - S.lo) * u(rng);
  }
  return y;
}

} // namespace

std::vector<GradcheckRow> run_gradcheck(const ExperimentConfig &c) {
  validate_config(c);
  const auto inst = build_instance(c, c.seeds.front());
  const auto &p = inst.problem;
  const double scale = c.corrupt_gradient ? 2.0 : 1.0;
  std::mt19937_64 rng(c.seeds.front());
  GradcheckRow gx{"grad_x", 0.0};
  GradcheckRow gy{"grad_y", 0.0};
  for (int s = 0; s < c.gradcheck_samples; ++s) {
    const auto x = random_point(p.manifold, c.seeds.front() * 7919 + static_cast<unsigned>(s));
    const Vector y = random_feasible_y(p.set, rng);
    const auto rx = fd_gradient_check([&](const Vector &xv) { return p.eval_f(xv, y); },
                                      [&](const Vector &xv) -> Vector { return scale * p.grad_x_f(xv, y); },
                                      x.data, 1, 1e-5, rng());
    const auto ry = fd_gradient_check([&](const Vector &yv) { return p.eval_f(x.data, yv); },
                                      [&](const Vector &yv) { return p.grad_y_f(x.data, yv); },
                                      y, 1, 1e-5, rng());
    gx.max_rel_error = std::max(gx.max_rel_error, rx.max_rel_error);
    gy.max_rel_error = std::max(gy.max_rel_error, ry.max_rel_error);
  }
  return {gx, gy};
}

// ---------------------------------------------------------------------------
// Plot data

namespace {

struct TraceColumns {
  std::string label;
  std::vector<int> k;
  std::vector<double> elapsed;
  std::vector<double> value;
};

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

TraceColumns read_trace(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open trace: " + path);
  }
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (header.empty()) {
      header = split(line);
    } else {
      rows.push_back(split(line));
    }
  }
  auto col = [&](const std::string &name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("trace " + path + " has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto ck = col("k");
  const auto ce = col("elapsed");
  const auto cd = col("D_k");
  const auto cg = col("G_beta");
  bool has_d = !rows.empty();
  for (const auto &r : rows) {
    has_d = has_d && r.size() > cd && !r[cd].empty();
  }
  TraceColumns t;
  t.label = (has_d ? "log10_D_" : "log10_G_") + fs::path(path).stem().string();
  for (const auto &r : rows) {
    if (r.size() < header.size()) {
      throw DataError("short row in trace " + path);
    }
    t.k.push_back(std::stoi(r[ck]));
    t.elapsed.push_back(std::stod(r[ce]));
    t.value.push_back(std::log10(std::max(std::stod(r[has_d ? cd : cg]), kPlotFloor)));
  }
  return t;
}

} // namespace

void write_plot_data(const std::vector<std::string> &trace_paths, const std::string &out_dir) {
  if (trace_paths.empty()) {
    throw DataError("no trace files given");
  }
  std::vector<TraceColumns> traces;
  for (const auto &p : trace_paths) {
    traces.push_back(read_trace(p));
  }
  fs::create_directories(out_dir);
  std::set<int> ks;
  std::size_t max_rows = 0;
  for (const auto &t : traces) {
    ks.insert(t.k.begin(), t.k.end());
    max_rows = std::max(max_rows, t.k.size());
  }
  {
    std::ofstream os(fs::path(out_dir) / "plot_iter.dat");
    os << "# k";
    for (const auto &t : traces) {
      os << " " << t.label;
    }
    os << "\n";
    for (const int k : ks) {
      os << k;
      for (const auto &t : traces) {
        const auto it = std::find(t.k.begin(), t.k.end(), k);
        os << " " << (it == t.k.end() ? std::string("nan")
                                      : fmt(t.value[static_cast<std::size_t>(it - t.k.begin())]));
      }
      os << "\n";
    }
  }
  {
    std::ofstream os(fs::path(out_dir) / "plot_time.dat");
    os << "#";
    for (const auto &t : traces) {
      os << " elapsed " << t.label;
    }
    os << "\n";
    for (std::size_t i = 0; i < max_rows; ++i) {
      bool first = true;
      for (const auto &t : traces) {
        os << (first ? "" : " ");
        first = false;
        if (i < t.k.size()) {
          os << fmt_ms(t.elapsed[i]) << " " << fmt(t.value[i]);
        } else {
          os << "nan nan";
        }
      }
      os << "\n";
    }
  }
}

} // namespace mpgda
