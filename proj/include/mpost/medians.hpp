#pragma once

#include "mpost/kernels.hpp"
#include "mpost/measures.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mpost {

/// Gram matrix S[i][j] = <Q_i, Q_j> of m points in a Hilbert space.
///
/// Weiszfeld only ever needs distances between convex combinations of the points,
/// and those follow from S alone:
///   |sum_j w_j Q_j - Q_i|^2 = w^T S w - 2 (S w)_i + S_ii.
class InnerProductMatrix {
 public:
  /// Validates symmetry (1e-10) and positive semidefiniteness (min eigenvalue >= -1e-8).
  static InnerProductMatrix from_gram(Eigen::MatrixXd gram);

  const Eigen::MatrixXd& values() const { return gram_; }
  Eigen::Index size() const { return gram_.rows(); }

 private:
  explicit InnerProductMatrix(Eigen::MatrixXd gram) : gram_(std::move(gram)) {}
  Eigen::MatrixXd gram_;
};

/// RKHS Gram matrix of the kernel mean embeddings. Upper triangle is computed
/// (optionally across threads) and mirrored. Diagonal must not exceed 1 + 1e-10.
InnerProductMatrix inner_product_matrix(std::span<const EmpiricalMeasure> measures,
                                        const KernelSpec& spec, int threads = 1);

struct WeiszfeldOptions {
  double epsilon = 1e-8;
  int max_iter = 1000;
};

struct WeiszfeldResult {
  Eigen::VectorXd weights;
  int iterations = 0;
  std::vector<double> objective_trace;
  bool converged = false;
};

/// Distances d_i = |Q(w) - Q_i| from the mixture Q(w) = sum_j w_j Q_j to every point.
Eigen::VectorXd distances_to_points(const InnerProductMatrix& s, const Eigen::VectorXd& w);

/// sum_i |Q(w) - Q_i|, the geometric-median objective.
double median_objective(const InnerProductMatrix& s, const Eigen::VectorXd& w);

/// Weiszfeld iteration for the geometric median of Q_1..Q_m, started from uniform weights.
/// Distances below 1e-10 are floored before inversion. Stops once the iterate moves by
/// at most epsilon in the Hilbert norm, or after max_iter updates.
WeiszfeldResult weiszfeld(const InnerProductMatrix& s, const WeiszfeldOptions& options = {});

/// Zeroes entries below 1/(2m) and renormalizes. Returns the input untouched when no
/// entry falls below the cutoff.
Eigen::VectorXd threshold_weights(const Eigen::VectorXd& w);

struct MetricMedianResult {
  Eigen::Index index = 0;
  double eps_star = 0.0;
};

/// Metric median: the point whose ball containing more than m/2 points is smallest.
/// eps_star is half that radius; ties go to the lowest index.
MetricMedianResult metric_median(const Eigen::MatrixXd& distances);

/// KL divergence between Bernoulli(alpha) and Bernoulli(q); requires 0 < q < alpha < 1.
double psi(double alpha, double q);

/// Parameters of the median concentration bounds.
struct ConcentrationParams {
  double alpha = 0.4;
  double q = 0.2;
  double gamma = 0.0;
  int m = 7;

  /// Throws ConfigError unless 0 < q < alpha < 1/2, 0 <= gamma < (alpha - q)/(1 - q), m >= 1.
  void validate() const;
  /// (1 - alpha) / sqrt(1 - 2 alpha).
  double c_alpha() const;
  /// exp(-m (1 - gamma) psi((alpha - gamma)/(1 - gamma), q)); geometric median at radius C_alpha eps.
  double geometric_bound() const;
  /// exp(-m (1 - gamma) psi((1/2 - gamma)/(1 - gamma), q)); metric median at radius 3 eps.
  double metric_bound() const;
};

/// A candidate subset count together with the M-posterior it produced.
struct MCandidate {
  int m_value = 0;
  EmpiricalMeasure posterior;
};

/// Pairwise MMD matrix across candidates, then the metric median. Returns the chosen m.
int select_m(std::span<const MCandidate> candidates, const KernelSpec& spec, int threads = 1);

/// Pairwise MMD distance matrix between measures.
Eigen::MatrixXd mmd_distance_matrix(std::span<const EmpiricalMeasure> measures,
                                    const KernelSpec& spec, int threads = 1);

nlohmann::json weiszfeld_to_json(const WeiszfeldResult& result);

}  // namespace mpost
