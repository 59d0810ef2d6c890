#pragma once

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tspca/asymcov.hpp"
#include "tspca/bootstrap.hpp"
#include "tspca/dgp.hpp"
#include "tspca/eigensystem.hpp"
#include "tspca/error.hpp"
#include "tspca/experiments.hpp"
#include "tspca/inference.hpp"
#include "tspca/io.hpp"
#include "tspca/parallel.hpp"
#include "tspca/series.hpp"

namespace tspca::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kMalformedInput = 2,
  kDegenerate = 3,
  kPrecondition = 4,
  kFailure = 5,
};

namespace fs = std::filesystem;
using io::Json;

struct AnalysisConfig {
  std::string input;
  std::vector<std::string> columns;
  std::string method = "bootstrap";
  std::optional<std::size_t> bandwidth;
  std::optional<std::size_t> block_size;  // default ceil(n^{1/3})
  std::size_t replicates = 500;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out = "tspca-out";
  std::size_t threads = 0;     // 0: TSPCA_THREADS or hardware concurrency
  std::size_t components = 0;  // rows in significance tables, 0 = all
  std::vector<std::string> sectors;
  double truncation = 0.1;
};

struct ExperimentConfig {
  std::string profile = "desk";
  std::vector<int> dgp_ids{1, 2, 3, 4, 5, 6, 7, 8};
  std::optional<std::size_t> n;
  std::optional<std::size_t> mc_replicates;
  std::optional<std::size_t> replicates;
  std::size_t block_size = 10;
  std::optional<std::size_t> bandwidth;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool bootstrap = true;
  bool direct = true;
  std::string out = "tspca-experiment";
};

namespace detail {

inline const char* kind_of(int code) {
  switch (code) {
    case kUsage: return "usage";
    case kMalformedInput: return "malformed_input";
    case kDegenerate: return "degenerate_eigenvalues";
    case kPrecondition: return "method_precondition";
    default: return "failure";
  }
}

inline int report(std::ostream& err, int code, std::string message) {
  for (auto& c : message)
    if (c == '\n' || c == '\r') c = ' ';
  err << "tspca: error=" << kind_of(code) << " exit=" << code << " reason=" << std::quoted(message) << '\n';
  return code;
}

inline std::size_t resolve_threads(std::size_t requested) {
  return requested > 0 ? requested : default_thread_count();
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<std::string> string_list(const Json& j) {
  if (j.is_string()) return split_list(j.get<std::string>());
  return j.get<std::vector<std::string>>();
}

inline Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  try {
    Json j = Json::parse(in);
    if (!j.is_object()) throw InvalidInput("config file must hold a JSON object");
    return j;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("config file: ") + e.what());
  }
}

// Applies a JSON value unless the option was given on the command line.
template <typename T>
void merge(const CLI::App& app, const std::string& flag, const Json& cfg, const char* key, T& target) {
  if (app.count(flag) > 0 || !cfg.contains(key)) return;
  try {
    target = cfg.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
void merge(const CLI::App& app, const std::string& flag, const Json& cfg, const char* key, std::optional<T>& target) {
  if (app.count(flag) > 0 || !cfg.contains(key) || cfg.at(key).is_null()) return;
  T value{};
  merge(app, flag, cfg, key, value);
  target = value;
}

inline Json optional_json(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const AnalysisConfig& c) {
  return {{"input", c.input},          {"columns", c.columns},     {"method", c.method},
          {"bandwidth", optional_json(c.bandwidth)},               {"block_size", optional_json(c.block_size)},
          {"replicates", c.replicates}, {"alpha", c.alpha},        {"seed", c.seed},
          {"out", c.out},               {"threads", c.threads},    {"components", c.components},
          {"sectors", c.sectors},       {"truncation", c.truncation}};
}

inline Json to_json(const ExperimentConfig& c, const ComparisonConfig& run) {
  return {{"profile", c.profile},
          {"dgp", c.dgp_ids},
          {"n", run.n},
          {"mc_replicates", run.replicates},
          {"replicates", run.bootstrap_replicates},
          {"block_size", run.block_size},
          {"bandwidth", optional_json(run.bandwidth)},
          {"direct", run.direct},
          {"seed", run.seed},
          {"threads", run.threads},
          {"out", c.out}};
}

inline std::vector<std::string> component_labels(std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < p; ++k) out.push_back("PC" + std::to_string(k + 1));
  return out;
}

}  // namespace detail

/// Runs the analysis pipeline and writes its artifacts under config.out.
/// Throws tspca::Error subclasses; run() maps them to exit codes.
inline void analyze(const AnalysisConfig& config, std::ostream& out) {
  if (config.input.empty()) throw InvalidArgument("--input is required");
  const auto table = io::select_columns(io::read_csv_file(config.input), config.columns);
  const MultivariateSeries series(table.data);
  const auto p = static_cast<Eigen::Index>(series.p());
  if (!config.sectors.empty() && config.sectors.size() != series.p()) {
    throw InvalidInput("expected " + std::to_string(series.p()) + " sector labels, got " +
                       std::to_string(config.sectors.size()));
  }
  if (!(config.alpha > 0.0 && config.alpha <= 0.5)) throw InvalidArgument("alpha must lie in (0, 0.5]");

  const EigenDecomposition decomp = eigendecompose(sample_covariance(series));
  require_distinct_eigenvalues(decomp.values);
  const ProportionOfVariation r = proportion_of_variation(decomp.values);

  Vector sd_values, sd_r;
  Matrix sd_loadings;
  Json method_detail;
  if (config.method == "bootstrap") {
    MBBConfig mbb{config.block_size.value_or(default_block_size(series.n())), config.replicates, config.seed};
    BootstrapOptions bo;
    bo.threads = detail::resolve_threads(config.threads);
    const auto res = bootstrap_sd(series, mbb, bo);
    sd_values = res.sd_values, sd_loadings = res.sd_loadings, sd_r = res.sd_r;
    method_detail = {{"block_size", mbb.block_size},
                     {"replicates", res.replicate_count},
                     {"failed_replicates", res.failed_replicates}};
  } else {
    Assumption a;
    if (config.method == "ad") a = Assumption::ad;
    else if (config.method == "dag") a = Assumption::dag;
    else if (config.method == "ind") a = Assumption::ind;
    else throw InvalidArgument("unknown method '" + config.method + "'");
    DirectOptions d;
    d.bandwidth = config.bandwidth;
    const auto se = standard_errors(direct_estimate(series, a, d));
    sd_values = se.sd_values, sd_loadings = se.sd_loadings, sd_r = se.sd_r;
    method_detail = {{"bandwidth", a == Assumption::ind ? Json(nullptr)
                                                        : Json(d.bandwidth.value_or(default_bandwidth(series.n())))}};
  }

  const ProportionCI ci = proportion_ci(r, sd_r, config.alpha);
  LoadingTestOptions to;
  to.components = config.components;
  const LoadingTestResult tests = test_loadings(decomp, sd_loadings, config.alpha, to);
  const LoadingTestResult screen = truncation_screen(decomp, config.truncation, config.components);
  const LoadingTable sig_table = loading_table(tests, table.columns, config.sectors);
  const LoadingTable screen_table = loading_table(screen, table.columns, config.sectors);

  const fs::path dir(config.out);
  fs::create_directories(dir);
  const auto labels = detail::component_labels(series.p());
  {
    Matrix m(p, 2);
    m.col(0) = decomp.values;
    m.col(1) = sd_values;
    std::ofstream f(dir / "eigenvalues.csv");
    io::write_matrix_csv(f, {"component", "eigenvalue", "sd"}, m, labels);
  }
  {
    std::vector<std::string> header{"component"};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    std::ofstream f(dir / "loadings.csv");
    io::write_matrix_csv(f, header, decomp.loadings(), labels);
    std::ofstream g(dir / "loadings_sd.csv");
    io::write_matrix_csv(g, header, sd_loadings, labels);
  }
  {
    Matrix m(p, 4);
    m.col(0) = r.r;
    m.col(1) = sd_r;
    m.col(2) = ci.lower;
    m.col(3) = ci.upper;
    std::ofstream f(dir / "proportion.csv");
    io::write_matrix_csv(f, {"component", "r", "sd", "lower", "upper"}, m, labels);
  }
  io::write_text(dir / "significance.csv", sig_table.render_csv());
  io::write_text(dir / "significance.txt", sig_table.render_text());
  io::write_text(dir / "truncation.txt", screen_table.render_text());

  Json results = {{"n", series.n()},
                  {"p", series.p()},
                  {"variables", table.columns},
                  {"method", config.method},
                  {"method_detail", method_detail},
                  {"eigenvalues", io::to_json(decomp.values)},
                  {"sd_eigenvalues", io::to_json(sd_values)},
                  {"loadings", io::to_json(decomp.loadings())},
                  {"sd_loadings", io::to_json(sd_loadings)},
                  {"proportion", io::to_json(r.r)},
                  {"sd_proportion", io::to_json(sd_r)},
                  {"proportion_lower", io::to_json(ci.lower)},
                  {"proportion_upper", io::to_json(ci.upper)},
                  {"significance", io::to_json(tests, table.columns)},
                  {"truncation", io::to_json(screen, table.columns)}};
  io::write_json(dir / "results.json", results);
  io::write_json(dir / "config.json", detail::to_json(config));

  out << "n=" << series.n() << " p=" << series.p() << " method=" << config.method << '\n';
  out << std::fixed << std::setprecision(4);
  for (Eigen::Index k = 0; k < p; ++k) {
    out << "PC" << (k + 1) << " eigenvalue=" << decomp.values(k) << " sd=" << sd_values(k) << " r=" << r.r(k) << " ["
        << ci.lower(k) << ", " << ci.upper(k) << "]\n";
  }
  out << sig_table.render_text();
  out.unsetf(std::ios::floatfield);
}

inline void simulate_to(int dgp_id, std::size_t n, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  const DGPSpec spec = fixture(dgp_id);
  const auto series = simulate(spec, n, seed);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  io::write_series_csv(dir / "series.csv", series);
  io::write_json(dir / "metadata.json", {{"dgp", dgp_id},
                                         {"name", spec.name},
                                         {"n", n},
                                         {"p", spec.p()},
                                         {"seed", seed},
                                         {"fixture_version", kFixtureVersion},
                                         {"checksum", io::checksum_hex(spec_checksum(spec))}});
  out << "wrote " << (dir / "series.csv").string() << " (" << n << " x " << spec.p() << ")\n";
}

/// Comparison run settings for a profile, before per-flag overrides.
[[nodiscard]] inline ComparisonConfig profile_defaults(const std::string& profile) {
  ComparisonConfig c;
  if (profile == "desk") {
    c.n = 2000, c.replicates = 500, c.bootstrap_replicates = 500;
  } else if (profile == "full") {
    c.n = 5000, c.replicates = 2000, c.bootstrap_replicates = 500;
  } else {
    throw InvalidArgument("unknown profile '" + profile + "'");
  }
  return c;
}

inline void experiment(const ExperimentConfig& config, std::ostream& out) {
  ComparisonConfig run = profile_defaults(config.profile);
  if (config.n) run.n = *config.n;
  if (config.mc_replicates) run.replicates = *config.mc_replicates;
  if (config.replicates) run.bootstrap_replicates = *config.replicates;
  if (!config.bootstrap) run.bootstrap_replicates = 0;
  run.direct = config.direct;
  run.block_size = config.block_size;
  run.bandwidth = config.bandwidth;
  run.seed = config.seed;
  run.threads = detail::resolve_threads(config.threads);

  const fs::path dir(config.out);
  fs::create_directories(dir);
  io::write_json(dir / "config.json", detail::to_json(config, run));

  std::ostringstream delta_r_csv, delta_tilde_csv;
  delta_r_csv << "dgp,method,k,delta_r\n";
  delta_tilde_csv << "dgp,method,k,delta_tilde\n";
  Json all = Json::array();
  for (int id : config.dgp_ids) {
    const auto res = run_comparison(id, run);
    const std::string stem = "dgp" + std::to_string(id);
    io::write_text(dir / ("metrics_" + stem + ".csv"), io::metric_table_csv(res.table));
    io::write_text(dir / ("plot_" + stem + ".csv"), io::plot_csv(res.plot));
    Json sds = Json::object();
    sds["ED"] = io::to_json(res.summary.empirical());
    for (const auto& [name, sd] : res.methods) sds[name] = io::to_json(sd);
    Json entry = io::to_json(res.table);
    entry["failed_replicates"] = res.summary.failed_replicates;
    entry["standard_deviations"] = sds;
    io::write_json(dir / ("metrics_" + stem + ".json"), entry);
    all.push_back(entry);

    out << "DGP " << id << " (n=" << run.n << ", N=" << res.summary.replicates << ")\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& [name, m] : res.table.methods) {
      out << "  " << std::setw(4) << name << " delta_tilde:";
      for (Eigen::Index k = 0; k < m.delta_tilde.size(); ++k) {
        out << ' ' << m.delta_tilde(k);
        delta_tilde_csv << id << ',' << name << ',' << k + 1 << ',' << io::detail::format_double(m.delta_tilde(k))
                        << '\n';
      }
      out << "  delta_r:";
      for (Eigen::Index k = 0; k < m.delta_r.size(); ++k) {
        out << ' ' << std::setprecision(3) << m.delta_r(k);
        delta_r_csv << id << ',' << name << ',' << k + 1 << ',' << io::detail::format_double(m.delta_r(k)) << '\n';
      }
      out << std::setprecision(2) << '\n';
    }
    out.unsetf(std::ios::floatfield);
  }
  io::write_text(dir / "table_delta_r.csv", delta_r_csv.str());
  io::write_text(dir / "table_delta_tilde.csv", delta_tilde_csv.str());
  io::write_json(dir / "metrics.json", all);
}

[[nodiscard]] inline Json fixtures_json(const std::vector<int>& ids) {
  Json list = Json::array();
  for (int id : ids) {
    Json j = io::to_json(fixture(id));
    j["id"] = id;
    list.push_back(j);
  }
  return {{"fixture_version", kFixtureVersion}, {"fixtures", list}};
}

/// Entry point shared by the executable and the tests. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Principal component analysis for stationary time series with dependence-aware inference", "tspca"};
  app.require_subcommand(1);

  AnalysisConfig acfg;
  std::string analyze_config, columns_arg, sectors_arg;
  auto* an = app.add_subcommand("analyze", "PCA of a CSV series with standard deviations and significance tables");
  an->add_option("--input", acfg.input, "CSV file: header row, one row per time point");
  an->add_option("--config", analyze_config, "JSON file with defaults for any flag");
  an->add_option("--columns", columns_arg, "Comma-separated column subset");
  an->add_option("--method", acfg.method, "ad, dag, ind or bootstrap")
      ->check(CLI::IsMember({"ad", "dag", "ind", "bootstrap"}));
  an->add_option("--bandwidth", acfg.bandwidth, "Daniell bandwidth M (default ceil(n^(1/3)))");
  an->add_option("--block-size", acfg.block_size, "Bootstrap block length (default ceil(n^(1/3)))");
  an->add_option("--replicates", acfg.replicates, "Bootstrap replicates R");
  an->add_option("--alpha", acfg.alpha, "Significance level");
  an->add_option("--seed", acfg.seed, "Random seed");
  an->add_option("--out", acfg.out, "Output directory");
  an->add_option("--threads", acfg.threads, "Worker threads (default TSPCA_THREADS or all cores)");
  an->add_option("--components", acfg.components, "Components shown in significance tables (0 = all)");
  an->add_option("--sectors", sectors_arg, "Comma-separated sector label per variable");
  an->add_option("--truncation", acfg.truncation, "Threshold of the non-inferential screening table");

  int sim_dgp = 0;
  std::size_t sim_n = 2000;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "tspca-sim";
  auto* sim = app.add_subcommand("simulate", "Simulate one of the eight fixture models");
  sim->add_option("--dgp", sim_dgp, "Model id 1..8")->required()->check(CLI::Range(1, kFixtureCount));
  sim->add_option("--n", sim_n, "Series length")->check(CLI::Range(std::size_t{2}, std::size_t{100'000'000}));
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", sim_out, "Output directory");

  ExperimentConfig ecfg;
  std::string dgp_arg;
  bool no_bootstrap = false, no_direct = false;
  auto* ex = app.add_subcommand("experiment", "Monte-Carlo comparison of standard deviation methods");
  ex->add_option("--profile", ecfg.profile, "desk (n=2000, N=500, R=500) or full (n=5000, N=2000)")
      ->check(CLI::IsMember({"desk", "full"}));
  ex->add_option("--dgp", dgp_arg, "Comma-separated model ids (default 1..8)");
  ex->add_option("--n", ecfg.n, "Override series length");
  ex->add_option("--mc-replicates", ecfg.mc_replicates, "Override Monte-Carlo replicates N");
  ex->add_option("--replicates", ecfg.replicates, "Override bootstrap replicates R");
  ex->add_option("--block-size", ecfg.block_size, "Bootstrap block length");
  ex->add_option("--bandwidth", ecfg.bandwidth, "Daniell bandwidth for the direct estimate");
  ex->add_option("--seed", ecfg.seed, "Random seed");
  ex->add_option("--threads", ecfg.threads, "Worker threads");
  ex->add_option("--out", ecfg.out, "Output directory");
  ex->add_flag("--no-bootstrap", no_bootstrap, "Skip the bootstrap estimate");
  ex->add_flag("--no-direct", no_direct, "Skip the direct estimate");

  std::string fix_out, fix_dgp;
  auto* fx = app.add_subcommand("fixtures", "Print the fixture model matrices as JSON");
  fx->add_option("--out", fix_out, "Write to this file instead of stdout");
  fx->add_option("--dgp", fix_dgp, "Comma-separated model ids (default all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    return detail::report(err, kUsage, e.what());
  }

  auto parse_ids = [](const std::string& arg) {
    std::vector<int> ids;
    for (const auto& s : detail::split_list(arg)) {
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw CLI::ValidationError("--dgp", "not an integer: " + s);
      }
      if (id < 1 || id > kFixtureCount) throw CLI::ValidationError("--dgp", "model id out of range 1..8: " + s);
      ids.push_back(id);
    }
    return ids;
  };

  try {
    if (*an) {
      const Json cfg = detail::load_config(analyze_config);
      detail::merge(*an, "--input", cfg, "input", acfg.input);
      detail::merge(*an, "--method", cfg, "method", acfg.method);
      detail::merge(*an, "--bandwidth", cfg, "bandwidth", acfg.bandwidth);
      detail::merge(*an, "--block-size", cfg, "block_size", acfg.block_size);
      detail::merge(*an, "--replicates", cfg, "replicates", acfg.replicates);
      detail::merge(*an, "--alpha", cfg, "alpha", acfg.alpha);
      detail::merge(*an, "--seed", cfg, "seed", acfg.seed);
      detail::merge(*an, "--out", cfg, "out", acfg.out);
      detail::merge(*an, "--threads", cfg, "threads", acfg.threads);
      detail::merge(*an, "--components", cfg, "components", acfg.components);
      detail::merge(*an, "--truncation", cfg, "truncation", acfg.truncation);
      if (an->count("--columns") > 0) acfg.columns = detail::split_list(columns_arg);
      else if (cfg.contains("columns")) acfg.columns = detail::string_list(cfg["columns"]);
      if (an->count("--sectors") > 0) acfg.sectors = detail::split_list(sectors_arg);
      else if (cfg.contains("sectors")) acfg.sectors = detail::string_list(cfg["sectors"]);
      if (acfg.method != "ad" && acfg.method != "dag" && acfg.method != "ind" && acfg.method != "bootstrap") {
        return detail::report(err, kUsage, "unknown method '" + acfg.method + "'");
      }
      if (acfg.input.empty()) return detail::report(err, kUsage, "--input is required");
      analyze(acfg, out);
    } else if (*sim) {
      simulate_to(sim_dgp, sim_n, sim_seed, sim_out, out);
    } else if (*ex) {
      if (!dgp_arg.empty()) ecfg.dgp_ids = parse_ids(dgp_arg);
      ecfg.bootstrap = !no_bootstrap;
      ecfg.direct = !no_direct;
      experiment(ecfg, out);
    } else if (*fx) {
      std::vector<int> ids;
      if (fix_dgp.empty()) {
        for (int id = 1; id <= kFixtureCount; ++id) ids.push_back(id);
      } else {
        ids = parse_ids(fix_dgp);
      }
      const Json j = fixtures_json(ids);
      if (fix_out.empty()) {
        out << j.dump(2) << '\n';
      } else {
        io::write_json(fix_out, j);
      }
    }
  } catch (const CLI::ValidationError& e) {
    return detail::report(err, kUsage, e.what());
  } catch (const InvalidInput& e) {
    return detail::report(err, kMalformedInput, e.what());
  } catch (const DegenerateEigenvalues& e) {
    return detail::report(err, kDegenerate, e.what());
  } catch (const InvalidArgument& e) {
    return detail::report(err, kPrecondition, e.what());
  } catch (const std::exception& e) {
    return detail::report(err, kFailure, e.what());
  }
  return kOk;
}

}  // namespace tspca::cli
