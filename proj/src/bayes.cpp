#include "mpost/bayes.hpp"

#include "mpost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mpost {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PartitionPlan partition(std::size_t n, std::size_t m, PartitionStrategy strategy,
                        std::uint64_t seed) {
  if (m < 1 || 2 * m > n) {
    throw ConfigError("partition requires 1 <= m <= n/2 (n=" + std::to_string(n) +
                      ", m=" + std::to_string(m) + ")");
  }
  PartitionPlan plan;
  plan.strategy = strategy;
  plan.seed = seed;
  plan.groups.resize(m);

  if (strategy == PartitionStrategy::GridStrided) {
    for (std::size_t i = 0; i < n; ++i) plan.groups[i % m].push_back(i);
    return plan;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t base = n / m;
  const std::size_t extra = n % m;
  std::size_t pos = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t len = base + (j < extra ? 1 : 0);
    plan.groups[j].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                          order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return plan;
}

nlohmann::json partition_to_json(const PartitionPlan& plan) {
  return {{"strategy",
           plan.strategy == PartitionStrategy::GridStrided ? "grid_strided" : "random_disjoint"},
          {"seed", plan.seed},
          {"groups", plan.groups}};
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& data, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = data.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

Eigen::VectorXd select_entries(const Eigen::VectorXd& data, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out[static_cast<Eigen::Index>(r)] = data[static_cast<Eigen::Index>(idx[r])];
  }
  return out;
}

GaussianPosterior gaussian_subset_posterior(const Eigen::MatrixXd& data, const MeanPrior& prior,
                                            double sigma2, int multiplicity) {
  if (data.rows() == 0 || data.cols() == 0) throw ConfigError("subset posterior needs data");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (multiplicity < 1) throw ConfigError("multiplicity must be at least 1");

  const Eigen::Index p = data.cols();
  const double lm = static_cast<double>(data.rows()) * multiplicity;
  const Eigen::VectorXd xbar = data.colwise().mean().transpose();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);

  GaussianPosterior post;
  post.multiplicity = multiplicity;
  if (std::holds_alternative<FlatPrior>(prior)) {
    post.mean = xbar;
    post.covariance = (sigma2 / lm) * eye;
    return post;
  }

  const auto& normal = std::get<NormalPrior>(prior);
  if (!(normal.tau2 > 0.0)) throw ConfigError("prior variance must be positive");
  if (normal.mean.size() != p) throw ConfigError("prior mean dimension mismatch");
  // Precision-weighted combination; written as lm tau2 / (lm tau2 + sigma2) so that the
  // N(0, I) case reduces to lm / (lm + sigma2) without an extra division.
  const double denom = lm * normal.tau2 + sigma2;
  post.mean = (lm * normal.tau2 / denom) * xbar + (sigma2 / denom) * normal.mean;
  post.covariance = (sigma2 * normal.tau2 / denom) * eye;
  return post;
}

EmpiricalMeasure sample_gaussian(const GaussianPosterior& posterior, int count,
                                 std::uint64_t seed) {
  if (count < 1) throw ConfigError("sample count must be at least 1");
  const Eigen::Index p = posterior.mean.size();
  const Eigen::LLT<Eigen::MatrixXd> llt(posterior.covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("posterior covariance Cholesky factorization failed");
  }
  const Eigen::MatrixXd lower = llt.matrixL();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(p, count);
  for (Eigen::Index c = 0; c < count; ++c) {
    for (Eigen::Index k = 0; k < p; ++k) z(k, c) = normal(rng);
  }
  Eigen::MatrixXd draws = (lower * z).colwise() + posterior.mean;
  return make_empirical(draws.transpose());
}

void GPModel::validate() const {
  if (!(length_scale > 0.0)) throw ConfigError("GP length-scale must be positive");
  if (!(noise_variance > 0.0)) throw ConfigError("GP noise variance must be positive");
  if (grid.size() == 0) throw ConfigError("GP prediction grid is empty");
}

namespace {

Eigen::MatrixXd se_cov(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double length_scale) {
  const double scale = 1.0 / (2.0 * length_scale * length_scale);
  Eigen::MatrixXd k(a.size(), b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[j];
      k(i, j) = std::exp(-scale * d * d);
    }
  }
  return k;
}

}  // namespace

GaussianPosterior gp_subset_posterior(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                                      const GPModel& model, int multiplicity) {
  model.validate();
  if (xs.size() == 0 || xs.size() != ys.size()) {
    throw ConfigError("GP inputs and outputs must be nonempty and of equal length");
  }
  if (multiplicity < 1) throw ConfigError("multiplicity must be at least 1");

  Eigen::MatrixXd k_train = se_cov(xs, xs, model.length_scale);
  k_train.diagonal().array() += model.noise_variance / multiplicity;
  const Eigen::LLT<Eigen::MatrixXd> llt(k_train);
  if (llt.info() != Eigen::Success) throw NumericalError("GP training covariance is singular");

  const Eigen::MatrixXd k_cross = se_cov(xs, model.grid, model.length_scale);  // n x g
  const Eigen::MatrixXd k_grid = se_cov(model.grid, model.grid, model.length_scale);
  const Eigen::MatrixXd v = llt.matrixL().solve(k_cross);

  GaussianPosterior post;
  post.multiplicity = multiplicity;
  post.mean = k_cross.transpose() * llt.solve(ys);
  Eigen::MatrixXd cov = k_grid - v.transpose() * v;
  cov = (0.5 * (cov + cov.transpose())).eval();
  cov.diagonal().array() += 1e-10;
  if (Eigen::LLT<Eigen::MatrixXd>(cov).info() != Eigen::Success) {
    throw NumericalError("GP posterior covariance is not positive definite after jitter");
  }
  post.covariance = std::move(cov);
  return post;
}

}  // namespace mpost
