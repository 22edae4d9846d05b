// Command-line front end: aggregation of externally produced subset draws, the
// simulation studies, the m sweep and the concentration check.

#include "mpost/errors.hpp"
#include "mpost/harness.hpp"
#include "mpost/measure_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using mpost::ConfigError;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::optional<mpost::KernelSpec> parse_kernel(const std::string& arg) {
  if (arg == "auto") return std::nullopt;
  const auto colon = arg.find(':');
  if (colon == std::string::npos) throw ConfigError("kernel must be auto, gaussian:h or mahalanobis:file");
  const std::string type = arg.substr(0, colon);
  const std::string value = arg.substr(colon + 1);
  if (type == "gaussian") {
    try {
      return mpost::KernelSpec::isotropic(std::stod(value));
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse kernel bandwidth '" + value + "'");
    }
  }
  if (type != "mahalanobis") throw ConfigError("unknown kernel type '" + type + "'");

  std::ifstream in(value);
  if (!in) throw ConfigError("cannot open kernel file " + value);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(value + ": " + e.what());
    }
    if (j.is_array()) j = {{"type", "mahalanobis"}, {"A", j}};
    return mpost::kernel_from_json(j);
  }
  // Plain text: one matrix row per line, entries separated by commas or spaces.
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    double v = 0.0;
    while (fields >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto p = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != p) {
      throw ConfigError("kernel matrix in " + value + " is not square");
    }
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return mpost::KernelSpec::mahalanobis(a);
}

std::vector<double> parse_list(const std::string& arg) {
  std::vector<double> out;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<int> parse_range(const std::string& arg) {
  int lo = 0;
  int hi = 0;
  int step = 1;
  char c1 = 0;
  char c2 = 0;
  std::istringstream ss(arg);
  ss >> lo >> c1 >> hi;
  if (!ss || c1 != ':') throw ConfigError("m range must look like lo:hi[:step]");
  if (ss >> c2) {
    if (c2 != ':' || !(ss >> step)) throw ConfigError("m range must look like lo:hi[:step]");
  }
  if (lo < 1 || hi < lo || step < 1) throw ConfigError("invalid m range " + arg);
  std::vector<int> out;
  for (int m = lo; m <= hi; m += step) out.push_back(m);
  return out;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

template <typename Writer>
void write_text(const std::string& path, Writer&& writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  writer(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Median-of-subset-posteriors aggregation and robustness simulations"};
  app.require_subcommand(1);

  // aggregate
  std::string agg_dir;
  std::string agg_kernel = "auto";
  std::string agg_out = "-";
  std::string agg_measure_out;
  mpost::MPosteriorConfig agg_cfg;
  bool agg_no_threshold = false;
  auto* aggregate = app.add_subcommand("aggregate", "M-posterior from per-subset draw files");
  aggregate->add_option("--draws", agg_dir, "Directory of subset draw files (CSV w,x1..xp or JSON)")
      ->required();
  aggregate->add_option("--kernel", agg_kernel, "auto | gaussian:h | mahalanobis:file");
  aggregate->add_option("--epsilon", agg_cfg.weiszfeld.epsilon, "Weiszfeld stopping tolerance");
  aggregate->add_option("--max-iter", agg_cfg.weiszfeld.max_iter, "Weiszfeld iteration cap");
  aggregate->add_flag("--no-threshold", agg_no_threshold, "Keep weights below 1/(2m)");
  aggregate->add_option("--threads", agg_cfg.threads, "Worker threads for the Gram matrix");
  aggregate->add_option("--out", agg_out, "Weights/diagnostics JSON (default stdout)");
  aggregate->add_option("--measure-out", agg_measure_out, "Optional CSV of the M-posterior atoms");

  // simulate-gaussian
  mpost::OutlierExperimentConfig gauss_cfg;
  std::string gauss_levels = "0.2,0.15,0.1,0.05";
  std::string gauss_kernel;
  std::string gauss_out = "-";
  auto* sim_gauss = app.add_subcommand("simulate-gaussian", "Gaussian mean with a growing outlier");
  sim_gauss->add_option("--reps", gauss_cfg.reps, "Replications");
  sim_gauss->add_option("--n", gauss_cfg.n, "Observations per data set");
  sim_gauss->add_option("--m", gauss_cfg.m, "Number of subsets");
  sim_gauss->add_option("--levels", gauss_levels, "Comma-separated alpha levels");
  sim_gauss->add_option("--max-index", gauss_cfg.max_outlier_index, "Largest outlier multiplier i");
  sim_gauss->add_option("--draws-per-subset", gauss_cfg.draws_per_subset, "Draws per subset posterior");
  sim_gauss->add_option("--full-draws", gauss_cfg.full_draws, "Draws from the full posterior");
  sim_gauss->add_option("--outlier-scale", gauss_cfg.outlier_scale, "0 gives clean data");
  sim_gauss->add_option("--kernel", gauss_kernel, "auto | gaussian:h (default gaussian:2/sqrt(n/m))");
  sim_gauss->add_option("--seed", gauss_cfg.seed, "Root seed");
  sim_gauss->add_option("--threads", gauss_cfg.threads, "Worker threads");
  sim_gauss->add_option("--out", gauss_out, "Coverage CSV (default stdout)");

  // simulate-gp
  int gp_case = 1;
  mpost::GPExperimentConfig gp_cfg;
  std::optional<int> gp_reps;
  std::optional<int> gp_n_clean;
  std::optional<int> gp_n_outliers;
  std::optional<int> gp_m;
  std::optional<double> gp_length;
  std::optional<int> gp_mult;
  std::optional<std::uint64_t> gp_seed;
  std::string gp_out = "-";
  std::string gp_summary;
  int gp_threads = 1;
  auto* sim_gp = app.add_subcommand("simulate-gp", "GP regression with a block of outliers");
  sim_gp->add_option("--case", gp_case, "1: 90 clean + 10 outliers, m=10; 2: 980 + 20, m=20")
      ->check(CLI::IsMember({1, 2}));
  sim_gp->add_option("--reps", gp_reps, "Replications (default 30)");
  sim_gp->add_option("--n-clean", gp_n_clean, "Override clean sample size");
  sim_gp->add_option("--n-outliers", gp_n_outliers, "Override outlier count");
  sim_gp->add_option("--m", gp_m, "Override subset count");
  sim_gp->add_option("--length-scale", gp_length, "GP length-scale (default: median distance)");
  sim_gp->add_option("--multiplicity", gp_mult, "Stochastic-approximation power (default m)");
  sim_gp->add_option("--seed", gp_seed, "Root seed");
  sim_gp->add_option("--threads", gp_threads, "Worker threads");
  sim_gp->add_option("--out", gp_out, "Curve CSV (default stdout)");
  sim_gp->add_option("--summary", gp_summary, "Per-replication error/coverage JSON");

  // select-m
  std::string sel_dir;
  std::string sel_data;
  std::string sel_range = "5:40:5";
  std::string sel_kernel = "auto";
  std::string sel_out = "-";
  double sel_sigma2 = 1.0;
  mpost::MPosteriorConfig sel_cfg;
  auto* select = app.add_subcommand("select-m", "Metric median over M-posteriors for a range of m");
  auto* sel_draws_opt = select->add_option(
      "--draws", sel_dir, "Directory with one subdirectory m<k> of subset draws per candidate");
  auto* sel_data_opt =
      select->add_option("--data", sel_data, "CSV x1..xp; Gaussian-mean model with known variance");
  sel_draws_opt->excludes(sel_data_opt);
  select->add_option("--m-range", sel_range, "lo:hi:step");
  select->add_option("--kernel", sel_kernel, "Kernel for the candidate distances");
  select->add_option("--sigma2", sel_sigma2, "Known observation variance (with --data)");
  select->add_option("--draws-per-subset", sel_cfg.draws_per_subset, "Draws per subset (with --data)");
  select->add_option("--seed", sel_cfg.seed, "Root seed (with --data)");
  select->add_option("--threads", sel_cfg.threads, "Worker threads");
  select->add_option("--out", sel_out, "JSON output (default stdout)");

  // concentration
  mpost::ConcentrationParams conc;
  int conc_trials = 2000;
  int conc_dim = 2;
  int conc_threads = 1;
  std::uint64_t conc_seed = 7;
  std::string conc_out = "-";
  auto* concentration = app.add_subcommand("concentration", "Monte-Carlo check of median concentration");
  concentration->add_option("--m", conc.m, "Number of estimators");
  concentration->add_option("--alpha", conc.alpha, "alpha in (q, 1/2)");
  concentration->add_option("--q", conc.q, "Per-estimator failure probability");
  concentration->add_option("--gamma", conc.gamma, "Fraction of corrupted estimators");
  concentration->add_option("--trials", conc_trials, "Monte-Carlo trials");
  concentration->add_option("--dim", conc_dim, "Dimension of the estimators");
  concentration->add_option("--seed", conc_seed, "Root seed");
  concentration->add_option("--threads", conc_threads, "Worker threads");
  concentration->add_option("--out", conc_out, "JSON output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*aggregate) {
      agg_cfg.kernel = parse_kernel(agg_kernel);
      agg_cfg.threshold = !agg_no_threshold;
      const auto measures = mpost::read_measure_dir(agg_dir);
      agg_cfg.m_subsets = static_cast<int>(measures.size());
      const auto result = mpost::m_posterior(measures, agg_cfg);
      nlohmann::json j = mpost::m_posterior_to_json(result);
      j["m"] = measures.size();
      write_json(agg_out, j);
      if (!agg_measure_out.empty()) mpost::write_measure_csv(fs::path(agg_measure_out), result.measure);
    } else if (*sim_gauss) {
      gauss_cfg.alphas = parse_list(gauss_levels);
      if (!gauss_kernel.empty()) {
        gauss_cfg.kernel = parse_kernel(gauss_kernel);
        gauss_cfg.auto_kernel = !gauss_cfg.kernel.has_value();
      }
      const auto report = mpost::run_outlier_experiment(gauss_cfg);
      write_text(gauss_out, [&](std::ostream& os) { mpost::write_coverage_csv(os, report); });
    } else if (*sim_gp) {
      gp_cfg = gp_case == 1 ? mpost::GPExperimentConfig::case_one()
                            : mpost::GPExperimentConfig::case_two();
      if (gp_reps) gp_cfg.reps = *gp_reps;
      if (gp_n_clean) gp_cfg.n_clean = *gp_n_clean;
      if (gp_n_outliers) gp_cfg.n_outliers = *gp_n_outliers;
      if (gp_m) gp_cfg.m = *gp_m;
      if (gp_seed) gp_cfg.seed = *gp_seed;
      gp_cfg.length_scale = gp_length;
      gp_cfg.multiplicity = gp_mult;
      gp_cfg.threads = gp_threads;
      const auto report = mpost::run_gp_experiment(gp_cfg);
      write_text(gp_out, [&](std::ostream& os) { mpost::write_gp_csv(os, report); });
      if (!gp_summary.empty()) write_json(gp_summary, mpost::gp_summary_json(report));
    } else if (*select) {
      const auto m_values = parse_range(sel_range);
      std::vector<mpost::MCandidate> candidates;
      if (!sel_data.empty()) {
        const auto table = mpost::read_numeric_csv(fs::path(sel_data));
        sel_cfg.kernel = std::nullopt;
        candidates = mpost::gaussian_m_candidates(table.values, m_values, sel_sigma2, sel_cfg);
      } else if (!sel_dir.empty()) {
        for (int m : m_values) {
          const fs::path sub = fs::path(sel_dir) / ("m" + std::to_string(m));
          const auto measures = mpost::read_measure_dir(sub);
          mpost::MPosteriorConfig cfg = sel_cfg;
          cfg.m_subsets = static_cast<int>(measures.size());
          candidates.push_back({m, mpost::m_posterior(measures, cfg).measure});
        }
      } else {
        throw ConfigError("select-m needs --draws or --data");
      }
      std::vector<mpost::EmpiricalMeasure> posts;
      for (const auto& c : candidates) posts.push_back(c.posterior);
      const auto explicit_kernel = parse_kernel(sel_kernel);
      const auto kernel = explicit_kernel ? *explicit_kernel : mpost::auto_kernel(posts);
      const auto distances = mpost::mmd_distance_matrix(posts, kernel, sel_cfg.threads);
      const auto med = mpost::metric_median(distances);
      std::vector<std::vector<double>> dist_rows(
          static_cast<std::size_t>(distances.rows()),
          std::vector<double>(static_cast<std::size_t>(distances.cols())));
      for (Eigen::Index i = 0; i < distances.rows(); ++i) {
        for (Eigen::Index k = 0; k < distances.cols(); ++k) {
          dist_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = distances(i, k);
        }
      }
      write_json(sel_out, {{"m_values", m_values},
                           {"selected_m", candidates[static_cast<std::size_t>(med.index)].m_value},
                           {"eps_star", med.eps_star},
                           {"kernel", mpost::kernel_to_json(kernel)},
                           {"distances", dist_rows}});
    } else if (*concentration) {
      const auto report =
          mpost::run_concentration_check(conc, conc_trials, conc_seed, conc_dim, conc_threads);
      write_json(conc_out, mpost::concentration_to_json(report));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mpost::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
