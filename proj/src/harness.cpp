#include "mpost/harness.hpp"

#include "mpost/errors.hpp"
#include "mpost/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace mpost {

// ---------------------------------------------------------------------------
// Pipeline

void MPosteriorConfig::validate() const {
  if (m_subsets < 1) throw ConfigError("m_subsets must be at least 1");
  if (draws_per_subset < 1) throw ConfigError("draws_per_subset must be at least 1");
  if (multiplicity && *multiplicity < 1) throw ConfigError("multiplicity must be at least 1");
  if (!(weiszfeld.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (weiszfeld.max_iter < 1) throw ConfigError("max_iter must be at least 1");
}

KernelSpec auto_kernel(std::span<const EmpiricalMeasure> measures) {
  if (measures.empty()) throw ConfigError("auto_kernel needs at least one measure");
  Eigen::Index rows = 0;
  for (const auto& m : measures) rows += m.size();
  Eigen::MatrixXd pooled(rows, measures.front().dim());
  Eigen::Index at = 0;
  for (const auto& m : measures) {
    if (m.dim() != pooled.cols()) throw ConfigError("measures differ in dimension");
    pooled.middleRows(at, m.size()) = m.atoms();
    at += m.size();
  }
  return KernelSpec::isotropic(median_bandwidth(pooled));
}

MPosteriorResult m_posterior(std::span<const EmpiricalMeasure> subset_draws,
                             const MPosteriorConfig& config) {
  config.validate();
  if (subset_draws.empty()) throw ConfigError("m_posterior needs at least one subset measure");

  if (subset_draws.size() == 1) {
    WeiszfeldResult trivial;
    trivial.weights = Eigen::VectorXd::Ones(1);
    trivial.objective_trace = {0.0};
    trivial.converged = true;
    return {subset_draws.front(), trivial, trivial.weights, config.kernel};
  }

  const KernelSpec kernel = config.kernel ? *config.kernel : auto_kernel(subset_draws);
  const InnerProductMatrix s = inner_product_matrix(subset_draws, kernel, config.threads);
  WeiszfeldResult wz = weiszfeld(s, config.weiszfeld);
  Eigen::VectorXd weights = config.threshold ? threshold_weights(wz.weights) : wz.weights;
  EmpiricalMeasure measure = mixture(subset_draws, weights);
  return {std::move(measure), std::move(wz), std::move(weights), kernel};
}

EmpiricalMeasure consensus_baseline(std::span<const EmpiricalMeasure> subset_draws) {
  if (subset_draws.empty()) throw ConfigError("consensus needs at least one subset");
  const auto& first = subset_draws.front();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.size(), first.dim());
  for (const auto& m : subset_draws) {
    if (m.size() != first.size()) throw ConfigError("consensus needs equal draw counts");
    if (m.dim() != first.dim()) throw ConfigError("consensus subsets differ in dimension");
    sum += m.atoms();
  }
  return make_empirical(sum / static_cast<double>(subset_draws.size()));
}

nlohmann::json m_posterior_to_json(const MPosteriorResult& result) {
  nlohmann::json j = weiszfeld_to_json(result.weiszfeld);
  j["final_weights"] =
      std::vector<double>(result.weights.data(), result.weights.data() + result.weights.size());
  if (result.kernel) j["kernel"] = kernel_to_json(*result.kernel);
  return j;
}

// ---------------------------------------------------------------------------
// Outlier experiment

std::string method_name(Method method) {
  switch (method) {
    case Method::MPosterior:
      return "m_posterior";
    case Method::FullPosterior:
      return "full_posterior";
    case Method::Consensus:
      return "consensus";
  }
  return "unknown";
}

void OutlierExperimentConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be at least 1");
  if (m < 1 || 2 * m > n) throw ConfigError("need 1 <= m <= n/2");
  if (draws_per_subset < 1 || full_draws < 1) throw ConfigError("draw counts must be positive");
  if (max_outlier_index < 1) throw ConfigError("max_outlier_index must be at least 1");
  if (alphas.empty()) throw ConfigError("at least one credible level is required");
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha levels must lie in (0, 1)");
  }
  if (!(outlier_scale >= 0.0)) throw ConfigError("outlier_scale must be nonnegative");
}

namespace {

struct Interval {
  double lower;
  double upper;
  double width() const { return upper - lower; }
  bool covers(double v) const { return lower <= v && v <= upper; }
};

Interval central_interval(const EmpiricalMeasure& measure, double alpha) {
  return {weighted_quantile(measure, alpha / 2.0), weighted_quantile(measure, 1.0 - alpha / 2.0)};
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

constexpr std::size_t kMethods = 3;

// intervals[method][alpha index] for one (replication, outlier index) cell.
using CellIntervals = std::array<std::vector<Interval>, kMethods>;

CellIntervals run_outlier_cell(const OutlierExperimentConfig& cfg, int outlier_index,
                               std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(cfg.n, 1);
  double max_abs = 0.0;
  for (int k = 0; k < cfg.n - 1; ++k) {
    x(k, 0) = normal(rng);
    max_abs = std::max(max_abs, std::abs(x(k, 0)));
  }
  x(cfg.n - 1, 0) = cfg.outlier_scale * outlier_index * max_abs;

  const auto plan = partition(static_cast<std::size_t>(cfg.n), static_cast<std::size_t>(cfg.m),
                              PartitionStrategy::RandomDisjoint, derive_seed(seed, 1));

  std::vector<EmpiricalMeasure> stochastic;
  std::vector<EmpiricalMeasure> plain;
  for (std::size_t j = 0; j < plan.groups.size(); ++j) {
    const Eigen::MatrixXd sub = select_rows(x, plan.groups[j]);
    const auto approx = gaussian_subset_posterior(sub, FlatPrior{}, 1.0, cfg.m);
    stochastic.push_back(sample_gaussian(approx, cfg.draws_per_subset, derive_seed(seed, 100 + j)));
    const auto local = gaussian_subset_posterior(sub, FlatPrior{}, 1.0, 1);
    plain.push_back(sample_gaussian(local, cfg.full_draws, derive_seed(seed, 1000 + j)));
  }

  MPosteriorConfig mcfg;
  mcfg.m_subsets = cfg.m;
  mcfg.draws_per_subset = cfg.draws_per_subset;
  if (!cfg.auto_kernel) {
    // Default bandwidth 2 sigma / sqrt(l): the unit-variance model kernel exp(-|a - b|^2 / 8)
    // rescaled to the spread of a size-l subset mean.
    const double l = static_cast<double>(cfg.n / cfg.m);
    mcfg.kernel = cfg.kernel ? *cfg.kernel : KernelSpec::isotropic(2.0 / std::sqrt(l));
  }
  const EmpiricalMeasure mpost = m_posterior(stochastic, mcfg).measure;

  const auto full_post = gaussian_subset_posterior(x, FlatPrior{}, 1.0, 1);
  const EmpiricalMeasure full = sample_gaussian(full_post, cfg.full_draws, derive_seed(seed, 2));
  const EmpiricalMeasure consensus = consensus_baseline(plain);

  CellIntervals out;
  const std::array<const EmpiricalMeasure*, kMethods> measures{&mpost, &full, &consensus};
  for (std::size_t k = 0; k < kMethods; ++k) {
    for (double a : cfg.alphas) out[k].push_back(central_interval(*measures[k], a));
  }
  return out;
}

}  // namespace

const CoverageRow& CoverageReport::at(int outlier_index, double alpha, Method method) const {
  for (const auto& row : rows) {
    if (row.outlier_index == outlier_index && std::abs(row.alpha - alpha) < 1e-12 &&
        row.method == method) {
      return row;
    }
  }
  throw ConfigError("no coverage row for the requested cell");
}

CoverageReport run_outlier_experiment(const OutlierExperimentConfig& cfg) {
  cfg.validate();
  const auto n_index = static_cast<std::size_t>(cfg.max_outlier_index);
  const auto n_reps = static_cast<std::size_t>(cfg.reps);
  std::vector<CellIntervals> cells(n_index * n_reps);
  parallel_for(cells.size(), cfg.threads, [&](std::size_t c) {
    const std::size_t i = c / n_reps;
    const std::size_t r = c % n_reps;
    // Cell seeds depend only on (replication, outlier index).
    cells[c] = run_outlier_cell(cfg, static_cast<int>(i + 1),
                                derive_seed(cfg.seed, r * 1000003ULL + i));
  });

  CoverageReport report;
  constexpr std::array<Method, kMethods> methods{Method::MPosterior, Method::FullPosterior,
                                                 Method::Consensus};
  for (std::size_t i = 0; i < n_index; ++i) {
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      for (std::size_t k = 0; k < kMethods; ++k) {
        CoverageRow row;
        row.outlier_index = static_cast<int>(i + 1);
        row.alpha = cfg.alphas[a];
        row.method = methods[k];
        std::vector<double> rel;
        int covered = 0;
        double width_sum = 0.0;
        for (std::size_t r = 0; r < n_reps; ++r) {
          const auto& cell = cells[i * n_reps + r];
          const Interval iv = cell[k][a];
          const Interval ref = cell[1][a];
          covered += iv.covers(0.0) ? 1 : 0;
          width_sum += iv.width();
          rel.push_back((iv.width() - ref.width()) / ref.width());
        }
        row.coverage = static_cast<double>(covered) / static_cast<double>(n_reps);
        row.mean_width = width_sum / static_cast<double>(n_reps);
        double rel_sum = 0.0;
        for (double v : rel) rel_sum += v;
        row.rel_width_diff_mean = rel_sum / static_cast<double>(n_reps);
        row.rel_width_diff_median = median_of(rel);
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
  out << "outlier_index,alpha,nominal,method,coverage,mean_width,rel_width_diff_mean,"
         "rel_width_diff_median\n";
  out << std::setprecision(10);
  for (const auto& row : report.rows) {
    out << row.outlier_index << ',' << row.alpha << ',' << 1.0 - row.alpha << ','
        << method_name(row.method) << ',' << row.coverage << ',' << row.mean_width << ','
        << row.rel_width_diff_mean << ',' << row.rel_width_diff_median << '\n';
  }
}

// ---------------------------------------------------------------------------
// GP experiment

double gp_truth(double x) { return 1.0 + 3.0 * std::sin(2.0 * std::numbers::pi * x - std::numbers::pi); }

GPExperimentConfig GPExperimentConfig::case_one() { return {}; }

GPExperimentConfig GPExperimentConfig::case_two() {
  GPExperimentConfig cfg;
  cfg.n_clean = 980;
  cfg.n_outliers = 20;
  cfg.m = 20;
  return cfg;
}

void GPExperimentConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be at least 1");
  if (n_clean < 1 || n_outliers < 0) throw ConfigError("invalid data sizes");
  const int n = n_clean + n_outliers;
  if (m < 1 || 2 * m > n) throw ConfigError("need 1 <= m <= n/2");
  const int last_group = (n - (m - 1) + m - 1) / m;
  if (n_outliers > last_group) {
    throw ConfigError("too many outliers to fit on one grid-strided subset");
  }
  if (grid_size < 1 || draws_per_subset < 1 || full_draws < 1) {
    throw ConfigError("grid and draw counts must be positive");
  }
  if (!(nugget > 0.0)) throw ConfigError("nugget must be positive");
  if (length_scale && !(*length_scale > 0.0)) throw ConfigError("length-scale must be positive");
  if (multiplicity && *multiplicity < 1) throw ConfigError("multiplicity must be at least 1");
}

GPDataset make_gp_dataset(const GPExperimentConfig& cfg, std::uint64_t seed) {
  const int n = cfg.n_clean + cfg.n_outliers;
  GPDataset data;
  data.xs = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);

  // Outliers occupy evenly spaced slots of the last stride-m subgrid {m-1, 2m-1, ...}.
  const std::size_t offset = static_cast<std::size_t>(cfg.m - 1);
  const std::size_t slots = (static_cast<std::size_t>(n) - offset + cfg.m - 1) / cfg.m;
  for (int t = 0; t < cfg.n_outliers; ++t) {
    const auto slot = static_cast<std::size_t>(t) * slots / static_cast<std::size_t>(cfg.n_outliers);
    data.outlier_positions.push_back(offset + slot * static_cast<std::size_t>(cfg.m));
  }

  std::vector<bool> is_outlier(static_cast<std::size_t>(n), false);
  for (auto pos : data.outlier_positions) is_outlier[pos] = true;
  double max_clean = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    if (!is_outlier[static_cast<std::size_t>(k)]) max_clean = std::max(max_clean, gp_truth(data.xs[k]));
  }
  data.outlier_level = cfg.outlier_factor * max_clean;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, cfg.data_noise_sd);
  data.ys.resize(n);
  for (int k = 0; k < n; ++k) {
    const double level = is_outlier[static_cast<std::size_t>(k)] ? data.outlier_level : gp_truth(data.xs[k]);
    data.ys[k] = level + noise(rng);
  }
  return data;
}

CurveSummary summarize_curves(const EmpiricalMeasure& curves, const Eigen::VectorXd& grid) {
  if (curves.dim() != grid.size()) throw ConfigError("curve dimension does not match the grid");
  const Eigen::Index g = grid.size();
  CurveSummary s;
  s.median.resize(g);
  s.lower.resize(g);
  s.upper.resize(g);
  int covered = 0;
  for (Eigen::Index k = 0; k < g; ++k) {
    const EmpiricalMeasure coord = marginal(curves, k);
    s.median[k] = weighted_quantile(coord, 0.5);
    s.lower[k] = weighted_quantile(coord, 0.025);
    s.upper[k] = weighted_quantile(coord, 0.975);
    const double truth = gp_truth(grid[k]);
    s.max_abs_error = std::max(s.max_abs_error, std::abs(s.median[k] - truth));
    covered += (s.lower[k] <= truth && truth <= s.upper[k]) ? 1 : 0;
  }
  s.band_coverage = static_cast<double>(covered) / static_cast<double>(g);
  return s;
}

GPReplication run_gp_replication(const GPExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const GPDataset data = make_gp_dataset(cfg, derive_seed(seed, 0));

  GPModel model;
  model.grid = Eigen::VectorXd::LinSpaced(cfg.grid_size, 0.0, 1.0);
  model.noise_variance = cfg.nugget;
  model.length_scale = cfg.length_scale ? *cfg.length_scale : median_bandwidth(data.xs);

  GPReplication out;
  const auto full_post = gp_subset_posterior(data.xs, data.ys, model, 1);
  out.full = summarize_curves(sample_gaussian(full_post, cfg.full_draws, derive_seed(seed, 1)),
                              model.grid);

  const auto plan = partition(static_cast<std::size_t>(data.xs.size()),
                              static_cast<std::size_t>(cfg.m), PartitionStrategy::GridStrided);
  const int mult = cfg.multiplicity.value_or(cfg.m);
  std::vector<EmpiricalMeasure> subsets;
  for (std::size_t j = 0; j < plan.groups.size(); ++j) {
    const auto post = gp_subset_posterior(select_entries(data.xs, plan.groups[j]),
                                          select_entries(data.ys, plan.groups[j]), model, mult);
    subsets.push_back(sample_gaussian(post, cfg.draws_per_subset, derive_seed(seed, 100 + j)));
  }
  MPosteriorConfig mcfg;
  mcfg.m_subsets = cfg.m;
  mcfg.draws_per_subset = cfg.draws_per_subset;
  mcfg.kernel = cfg.kernel;
  const auto result = m_posterior(subsets, mcfg);
  out.m_posterior = summarize_curves(result.measure, model.grid);
  return out;
}

GPReport run_gp_experiment(const GPExperimentConfig& cfg) {
  cfg.validate();
  GPReport report;
  report.grid = Eigen::VectorXd::LinSpaced(cfg.grid_size, 0.0, 1.0);
  report.truth = report.grid.unaryExpr([](double x) { return gp_truth(x); });
  report.replications.resize(static_cast<std::size_t>(cfg.reps));
  GPExperimentConfig inner = cfg;
  inner.threads = 1;
  parallel_for(report.replications.size(), cfg.threads, [&](std::size_t r) {
    report.replications[r] = run_gp_replication(inner, derive_seed(cfg.seed, r));
  });
  return report;
}

CurveSummary GPReport::average(Method method) const {
  if (replications.empty()) throw ConfigError("empty GP report");
  const auto pick = [method](const GPReplication& r) -> const CurveSummary& {
    return method == Method::MPosterior ? r.m_posterior : r.full;
  };
  CurveSummary avg;
  const Eigen::Index g = grid.size();
  avg.median = Eigen::VectorXd::Zero(g);
  avg.lower = Eigen::VectorXd::Zero(g);
  avg.upper = Eigen::VectorXd::Zero(g);
  for (const auto& r : replications) {
    const auto& c = pick(r);
    avg.median += c.median;
    avg.lower += c.lower;
    avg.upper += c.upper;
    avg.max_abs_error += c.max_abs_error;
    avg.band_coverage += c.band_coverage;
  }
  const auto count = static_cast<double>(replications.size());
  avg.median /= count;
  avg.lower /= count;
  avg.upper /= count;
  avg.max_abs_error /= count;
  avg.band_coverage /= count;
  return avg;
}

void write_gp_csv(std::ostream& out, const GPReport& report) {
  out << "method,x,f0,median,lower,upper\n" << std::setprecision(10);
  for (Method method : {Method::MPosterior, Method::FullPosterior}) {
    const CurveSummary avg = report.average(method);
    const std::string name = method == Method::MPosterior ? "m_posterior_gp" : "full_gp";
    for (Eigen::Index k = 0; k < report.grid.size(); ++k) {
      out << name << ',' << report.grid[k] << ',' << report.truth[k] << ',' << avg.median[k]
          << ',' << avg.lower[k] << ',' << avg.upper[k] << '\n';
    }
  }
}

nlohmann::json gp_summary_json(const GPReport& report) {
  nlohmann::json j;
  for (Method method : {Method::MPosterior, Method::FullPosterior}) {
    std::vector<double> errors;
    std::vector<double> coverage;
    for (const auto& r : report.replications) {
      const auto& c = method == Method::MPosterior ? r.m_posterior : r.full;
      errors.push_back(c.max_abs_error);
      coverage.push_back(c.band_coverage);
    }
    const CurveSummary avg = report.average(method);
    j[method == Method::MPosterior ? "m_posterior_gp" : "full_gp"] = {
        {"max_abs_error", errors},
        {"band_coverage", coverage},
        {"mean_max_abs_error", avg.max_abs_error},
        {"mean_band_coverage", avg.band_coverage}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Concentration check

double ConcentrationReport::standard_error(double p) const {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

ConcentrationReport run_concentration_check(const ConcentrationParams& params, int trials,
                                            std::uint64_t seed, int dim, int threads) {
  params.validate();
  if (trials < 100) throw ConfigError("at least 100 trials are required");
  if (dim < 1) throw ConfigError("dimension must be at least 1");

  ConcentrationReport report;
  report.params = params;
  report.trials = trials;
  report.dim = dim;
  report.radius = 1.0;
  report.geometric_bound = params.geometric_bound();
  report.metric_bound = params.metric_bound();

  // For dim = 2, |theta|^2 / s^2 is chi-square(2) and P(|theta| > eps) = exp(-eps^2 / (2 s^2)).
  // Other dimensions calibrate s by a fixed-seed Monte-Carlo quantile of |z|.
  double sd = 0.0;
  if (dim == 2) {
    sd = report.radius / std::sqrt(-2.0 * std::log(params.q));
  } else {
    std::mt19937_64 rng(derive_seed(seed, 0xCA11B));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> norms(200000);
    for (auto& v : norms) {
      double s2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double z = normal(rng);
        s2 += z * z;
      }
      v = std::sqrt(s2);
    }
    const auto idx = static_cast<std::size_t>((1.0 - params.q) * static_cast<double>(norms.size()));
    std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(idx), norms.end());
    sd = report.radius / norms[idx];
  }

  const int corrupted = static_cast<int>(std::floor(params.gamma * params.m));
  struct TrialOutcome {
    bool single = false;
    bool geometric = false;
    bool metric = false;
  };
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
  parallel_for(outcomes.size(), threads, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd pts(params.m, dim);
    for (int j = 0; j < params.m; ++j) {
      for (int k = 0; k < dim; ++k) pts(j, k) = sd * normal(rng);
    }
    for (int j = params.m - corrupted; j < params.m; ++j) {
      Eigen::VectorXd dir(dim);
      for (int k = 0; k < dim; ++k) dir[k] = normal(rng);
      pts.row(j) = 1e3 * dir.normalized().transpose();
    }

    Eigen::MatrixXd gram = pts * pts.transpose();
    gram = 0.5 * (gram + gram.transpose()).eval();
    const auto wz = weiszfeld(InnerProductMatrix::from_gram(std::move(gram)));
    const Eigen::VectorXd geo = pts.transpose() * wz.weights;

    Eigen::MatrixXd dist(params.m, params.m);
    for (int a = 0; a < params.m; ++a) {
      for (int b = 0; b < params.m; ++b) dist(a, b) = (pts.row(a) - pts.row(b)).norm();
    }
    const auto med0 = metric_median(dist);

    outcomes[t].single = pts.row(0).norm() > report.radius;
    outcomes[t].geometric = geo.norm() > params.c_alpha() * report.radius;
    outcomes[t].metric = pts.row(med0.index).norm() > 3.0 * report.radius;
  });

  int single = 0;
  int geometric = 0;
  int metric = 0;
  for (const auto& o : outcomes) {
    single += o.single;
    geometric += o.geometric;
    metric += o.metric;
  }
  report.q_hat = static_cast<double>(single) / trials;
  report.geometric_failure = static_cast<double>(geometric) / trials;
  report.metric_failure = static_cast<double>(metric) / trials;
  return report;
}

nlohmann::json concentration_to_json(const ConcentrationReport& r) {
  return {{"m", r.params.m},
          {"alpha", r.params.alpha},
          {"q", r.params.q},
          {"gamma", r.params.gamma},
          {"c_alpha", r.params.c_alpha()},
          {"trials", r.trials},
          {"dim", r.dim},
          {"eps", r.radius},
          {"q_hat", r.q_hat},
          {"geometric_failure", r.geometric_failure},
          {"geometric_bound", r.geometric_bound},
          {"geometric_se", r.standard_error(r.geometric_bound)},
          {"metric_failure", r.metric_failure},
          {"metric_bound", r.metric_bound},
          {"metric_se", r.standard_error(r.metric_bound)}};
}

// ---------------------------------------------------------------------------
// m selection

std::vector<MCandidate> gaussian_m_candidates(const Eigen::MatrixXd& data,
                                              const std::vector<int>& m_values, double sigma2,
                                              const MPosteriorConfig& base) {
  if (m_values.empty()) throw ConfigError("no candidate m values");
  std::vector<std::optional<MCandidate>> slots(m_values.size());
  parallel_for(m_values.size(), base.threads, [&](std::size_t c) {
    const int m = m_values[c];
    const auto plan = partition(static_cast<std::size_t>(data.rows()), static_cast<std::size_t>(m),
                                PartitionStrategy::RandomDisjoint, derive_seed(base.seed, c));
    std::vector<EmpiricalMeasure> subsets;
    for (std::size_t j = 0; j < plan.groups.size(); ++j) {
      const auto post = gaussian_subset_posterior(select_rows(data, plan.groups[j]), FlatPrior{},
                                                  sigma2, base.multiplicity.value_or(m));
      subsets.push_back(sample_gaussian(post, base.draws_per_subset,
                                        derive_seed(base.seed, 10000 * (c + 1) + j)));
    }
    MPosteriorConfig cfg = base;
    cfg.m_subsets = m;
    cfg.threads = 1;
    slots[c] = MCandidate{m, m_posterior(subsets, cfg).measure};
  });
  std::vector<MCandidate> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace mpost
