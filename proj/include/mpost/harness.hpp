#pragma once

#include "mpost/bayes.hpp"
#include "mpost/kernels.hpp"
#include "mpost/measures.hpp"
#include "mpost/medians.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mpost {

struct MPosteriorConfig {
  int m_subsets = 10;
  std::optional<KernelSpec> kernel;  // empty: median heuristic on the pooled draws
  int draws_per_subset = 100;
  WeiszfeldOptions weiszfeld;
  std::optional<int> multiplicity;  // empty: m_subsets
  bool threshold = true;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  int effective_multiplicity() const { return multiplicity.value_or(m_subsets); }
};

struct MPosteriorResult {
  EmpiricalMeasure measure;
  WeiszfeldResult weiszfeld;
  Eigen::VectorXd weights;  // after thresholding when enabled
  std::optional<KernelSpec> kernel;  // unset only for a single subset
};

/// Kernel used when the configuration asks for "auto": isotropic Gaussian with the
/// median pairwise distance of all pooled atoms as bandwidth.
KernelSpec auto_kernel(std::span<const EmpiricalMeasure> measures);

/// Geometric median of the subset measures in the RKHS, optional 1/(2m) thresholding,
/// and the resulting mixture of subset measures.
MPosteriorResult m_posterior(std::span<const EmpiricalMeasure> subset_draws,
                             const MPosteriorConfig& config);

/// Draw-averaging baseline: the i-th output atom is the average of the i-th draws.
EmpiricalMeasure consensus_baseline(std::span<const EmpiricalMeasure> subset_draws);

nlohmann::json m_posterior_to_json(const MPosteriorResult& result);

// ---------------------------------------------------------------------------
// Univariate Gaussian mean with one growing outlier.

enum class Method { MPosterior, FullPosterior, Consensus };
std::string method_name(Method method);

struct OutlierExperimentConfig {
  int reps = 50;
  int n = 100;
  int m = 10;
  int draws_per_subset = 100;
  int full_draws = 1000;
  int max_outlier_index = 25;
  std::vector<double> alphas{0.2, 0.15, 0.10, 0.05};
  /// Multiplies the outlier x_n = i * max|x_1..x_{n-1}|; 0 gives a clean control.
  double outlier_scale = 1.0;
  /// Empty: isotropic Gaussian with bandwidth 2 / sqrt(floor(n / m)), i.e. the unit-variance
  /// model kernel exp(-|a - b|^2 / 8) rescaled to the sampling spread of one subset mean.
  std::optional<KernelSpec> kernel;
  bool auto_kernel = false;
  std::uint64_t seed = 20140101;
  int threads = 1;

  void validate() const;
};

struct CoverageRow {
  int outlier_index = 0;
  double alpha = 0.0;
  Method method = Method::MPosterior;
  double coverage = 0.0;
  double mean_width = 0.0;
  /// (width_method - width_full) / width_full, mean and median over replications.
  double rel_width_diff_mean = 0.0;
  double rel_width_diff_median = 0.0;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  const CoverageRow& at(int outlier_index, double alpha, Method method) const;
};

CoverageReport run_outlier_experiment(const OutlierExperimentConfig& config);
void write_coverage_csv(std::ostream& out, const CoverageReport& report);

// ---------------------------------------------------------------------------
// GP regression with a block of gross outliers.

double gp_truth(double x);  // 1 + 3 sin(2 pi x - pi)

struct GPExperimentConfig {
  int n_clean = 90;
  int n_outliers = 10;
  int m = 10;
  int reps = 30;
  int grid_size = 100;
  int draws_per_subset = 100;
  int full_draws = 1000;
  double nugget = 0.01;
  double data_noise_sd = 1.0;
  double outlier_factor = 10.0;
  std::optional<double> length_scale;  // empty: median pairwise distance of the inputs
  std::optional<int> multiplicity;     // empty: m
  std::optional<KernelSpec> kernel;    // empty: median heuristic on pooled draws
  std::uint64_t seed = 20140102;
  int threads = 1;

  static GPExperimentConfig case_one();
  static GPExperimentConfig case_two();
  void validate() const;
};

/// One synthetic data set: equispaced inputs on [0, 1]; outliers sit on every
/// stride-m position of the last grid-strided group, spread evenly along it.
struct GPDataset {
  Eigen::VectorXd xs;
  Eigen::VectorXd ys;
  std::vector<std::size_t> outlier_positions;
  double outlier_level = 0.0;
};
GPDataset make_gp_dataset(const GPExperimentConfig& config, std::uint64_t seed);

struct CurveSummary {
  Eigen::VectorXd median;
  Eigen::VectorXd lower;  // 2.5%
  Eigen::VectorXd upper;  // 97.5%
  double max_abs_error = 0.0;
  double band_coverage = 0.0;
};

/// Pointwise median and 95% band of a measure over curves evaluated on `grid`.
CurveSummary summarize_curves(const EmpiricalMeasure& curves, const Eigen::VectorXd& grid);

struct GPReplication {
  CurveSummary m_posterior;
  CurveSummary full;
};

struct GPReport {
  Eigen::VectorXd grid;
  Eigen::VectorXd truth;
  std::vector<GPReplication> replications;

  /// Mean over replications of one method's median/lower/upper curves.
  CurveSummary average(Method method) const;
};

GPReplication run_gp_replication(const GPExperimentConfig& config, std::uint64_t seed);
GPReport run_gp_experiment(const GPExperimentConfig& config);
void write_gp_csv(std::ostream& out, const GPReport& report);
nlohmann::json gp_summary_json(const GPReport& report);

// ---------------------------------------------------------------------------
// Monte-Carlo check of the median concentration bounds.

struct ConcentrationReport {
  ConcentrationParams params;
  int trials = 0;
  int dim = 2;
  double radius = 1.0;           // eps
  double q_hat = 0.0;            // empirical failure rate of a single clean estimator
  double geometric_failure = 0.0;  // |med_g - theta0| > C_alpha eps
  double metric_failure = 0.0;     // |med_0 - theta0| > 3 eps
  double geometric_bound = 0.0;
  double metric_bound = 0.0;

  double standard_error(double p) const;
};

/// m independent estimators of theta0 = 0 in R^dim, each N(0, s^2 I) with s chosen so
/// that P(|theta_j| > eps) = q exactly; floor(gamma m) of them are replaced by points
/// at distance 1e3.
ConcentrationReport run_concentration_check(const ConcentrationParams& params, int trials,
                                            std::uint64_t seed, int dim = 2, int threads = 1);
nlohmann::json concentration_to_json(const ConcentrationReport& report);

// ---------------------------------------------------------------------------
// Choice of m over a candidate range.

/// Gaussian-mean model with known variance and flat prior: for every candidate m,
/// partition the rows of `data`, sample the stochastic-approximation subset posteriors
/// and form the M-posterior.
std::vector<MCandidate> gaussian_m_candidates(const Eigen::MatrixXd& data,
                                              const std::vector<int>& m_values, double sigma2,
                                              const MPosteriorConfig& base);

}  // namespace mpost
