#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace mpost {

/// Discrete probability measure sum_i w_i delta_{z_i} over points in R^p.
///
/// Atoms are stored one per row of an N x p matrix in insertion order.
/// Weights are nonnegative and sum to one. Zero-weight atoms are kept so
/// that atom indices stay stable; use prune_zero_weights() to drop them.
/// Instances are immutable once built.
class EmpiricalMeasure {
 public:
  Eigen::Index size() const { return atoms_.rows(); }
  Eigen::Index dim() const { return atoms_.cols(); }

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Weighted mean of the atoms.
  Eigen::VectorXd mean() const { return atoms_.transpose() * weights_; }

 private:
  EmpiricalMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {}

  friend EmpiricalMeasure make_empirical(Eigen::MatrixXd atoms,
                                         std::optional<Eigen::VectorXd> weights);

  Eigen::MatrixXd atoms_;
  Eigen::VectorXd weights_;
};

/// Builds a measure from an N x p atom matrix. Without weights every atom gets 1/N;
/// given weights are normalized to sum to one.
/// Throws ConfigError on empty input, negative or non-finite weights, or all-zero weights.
EmpiricalMeasure make_empirical(Eigen::MatrixXd atoms,
                                std::optional<Eigen::VectorXd> weights = std::nullopt);

/// Row-list convenience overload; throws ConfigError when rows differ in length.
EmpiricalMeasure make_empirical(const std::vector<std::vector<double>>& atoms,
                                const std::vector<double>& weights = {});

/// Brace-list convenience overload: make_empirical({{0.0}, {1.0}}, {3.0, 1.0}).
EmpiricalMeasure make_empirical(std::initializer_list<std::initializer_list<double>> atoms,
                                std::initializer_list<double> weights = {});

/// Dirac measure at a single point.
EmpiricalMeasure dirac(const Eigen::VectorXd& point);

/// sum_j mix_weights[j] * measures[j]. Atoms are concatenated in input order and each
/// carries the product of its mix weight and its in-measure weight.
EmpiricalMeasure mixture(std::span<const EmpiricalMeasure> measures,
                         const Eigen::VectorXd& mix_weights);

/// Left-continuous inverse of the weighted CDF of a one-dimensional measure:
/// the smallest atom whose cumulative weight reaches q.
double weighted_quantile(const EmpiricalMeasure& measure, double q);

/// Marginal of one coordinate, same weights.
EmpiricalMeasure marginal(const EmpiricalMeasure& measure, Eigen::Index coordinate);

EmpiricalMeasure prune_zero_weights(const EmpiricalMeasure& measure);

}  // namespace mpost
