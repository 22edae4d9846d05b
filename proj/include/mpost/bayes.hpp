#pragma once

#include "mpost/measures.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mpost {

/// Seed for stream `stream` under a root seed (splitmix64 finalizer). Each subset,
/// replication or trial draws from its own stream so results do not depend on
/// execution order or thread count.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

enum class PartitionStrategy { RandomDisjoint, GridStrided };

struct PartitionPlan {
  std::vector<std::vector<std::size_t>> groups;
  PartitionStrategy strategy = PartitionStrategy::RandomDisjoint;
  std::uint64_t seed = 0;
};

/// Splits {0..n-1} into m disjoint groups; requires 1 <= m <= n/2.
///
/// RandomDisjoint shuffles with `seed` and cuts into contiguous chunks, the first
/// n mod m chunks one longer. GridStrided assigns {j, j+m, j+2m, ...} to group j,
/// so each group is a coarser copy of an ordered design grid.
PartitionPlan partition(std::size_t n, std::size_t m, PartitionStrategy strategy,
                        std::uint64_t seed = 0);

nlohmann::json partition_to_json(const PartitionPlan& plan);

/// Rows of `data` selected by a group of indices.
Eigen::MatrixXd select_rows(const Eigen::MatrixXd& data, const std::vector<std::size_t>& rows);
Eigen::VectorXd select_entries(const Eigen::VectorXd& data, const std::vector<std::size_t>& idx);

struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  int multiplicity = 1;
};

struct FlatPrior {};

/// N(mean, tau2 * I) prior on the mean parameter.
struct NormalPrior {
  Eigen::VectorXd mean;
  double tau2 = 1.0;
};

using MeanPrior = std::variant<FlatPrior, NormalPrior>;

/// Posterior of theta in X ~ N(theta, sigma2 I) from l observations (rows of `data`), with the
/// likelihood raised to `multiplicity` (every observation counted that many times).
GaussianPosterior gaussian_subset_posterior(const Eigen::MatrixXd& data, const MeanPrior& prior,
                                            double sigma2, int multiplicity);

/// `count` i.i.d. draws mean + L z with L the Cholesky factor of the covariance.
EmpiricalMeasure sample_gaussian(const GaussianPosterior& posterior, int count,
                                 std::uint64_t seed);

/// Zero-mean GP regression on scalar inputs with a unit-variance squared-exponential
/// covariance exp(-(x - x')^2 / (2 l^2)) and Gaussian noise.
struct GPModel {
  double length_scale = 0.2;
  double noise_variance = 0.01;
  Eigen::VectorXd grid;

  void validate() const;
};

/// GP posterior over `model.grid`. The stochastic approximation (likelihood to the
/// power `multiplicity`) enters as noise variance / multiplicity. The covariance is
/// symmetrized and jittered by 1e-10 on the diagonal.
GaussianPosterior gp_subset_posterior(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                                      const GPModel& model, int multiplicity);

}  // namespace mpost
