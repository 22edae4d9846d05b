#pragma once

#include "mpost/measures.hpp"

#include <Eigen/Dense>

#include <functional>
#include <variant>

#include <json.hpp>

namespace mpost {

/// k(x, y) = exp(-|x - y|^2 / (2 h^2)).
struct IsotropicGaussian {
  double bandwidth;
};

/// k(x, y) = exp(-(x - y)^T A (x - y)) with A symmetric positive definite.
struct MahalanobisGaussian {
  Eigen::MatrixXd scale;
};

/// A unit-diagonal Gaussian kernel (k(x, x) = 1).
///
/// Both variants reduce to exp(-|T(x - y)|^2) for a linear feature map T:
/// T = I / (sqrt(2) h) for the isotropic kernel and T = L^T with A = L L^T for the
/// Mahalanobis one. The map is computed once at construction.
class KernelSpec {
 public:
  static KernelSpec isotropic(double bandwidth);
  static KernelSpec mahalanobis(const Eigen::MatrixXd& scale);

  const std::variant<IsotropicGaussian, MahalanobisGaussian>& variant() const { return variant_; }
  bool is_isotropic() const { return std::holds_alternative<IsotropicGaussian>(variant_); }

  /// Input dimension the kernel is bound to; 0 for the isotropic kernel (any dimension).
  Eigen::Index dim() const;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& y) const;

  /// The exponent (x - y)^T A (x - y) itself.
  double exponent(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y) const;

  /// Rows of `atoms` mapped through T; squared distances of features give the exponent.
  Eigen::MatrixXd features(const Eigen::MatrixXd& atoms) const;

  void check_dim(Eigen::Index p) const;

 private:
  explicit KernelSpec(std::variant<IsotropicGaussian, MahalanobisGaussian> v);

  std::variant<IsotropicGaussian, MahalanobisGaussian> variant_;
  double iso_scale_ = 0.0;
  Eigen::MatrixXd upper_;  // L^T, Mahalanobis only
};

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Kernel-induced metric sqrt(k(x,x) + k(y,y) - 2 k(x,y)).
double rho_k(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// RKHS inner product of the mean embeddings: sum_ij beta_i gamma_j k(z_i, y_j).
double inner_product(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const KernelSpec& spec);

/// Squared RKHS distance between mean embeddings, clamped at zero.
double mmd_squared(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const KernelSpec& spec);

double mmd(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const KernelSpec& spec);

/// Median of pairwise Euclidean distances. Inputs over 1000 rows are subsampled with a
/// fixed stride. Throws ConfigError if no pair is at positive distance.
double median_bandwidth(const Eigen::MatrixXd& points);

/// Hellinger distance between N(mu1, sigma1) and N(mu2, sigma2).
double hellinger_gaussian(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                          const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2);

/// Hellinger distance inside an exponential family with log-partition G, from
/// h^2 = 1 - exp(-(G(t1) + G(t2) - 2 G((t1 + t2) / 2)) / 2).
double hellinger_expfam(const std::function<double(const Eigen::VectorXd&)>& log_partition,
                        const Eigen::VectorXd& theta1, const Eigen::VectorXd& theta2);

namespace detail {
/// Weighted kernel double sum over pre-mapped features (rows of KernelSpec::features()).
double feature_inner_product(const Eigen::MatrixXd& fx, const Eigen::VectorXd& wx,
                             const Eigen::MatrixXd& fy, const Eigen::VectorXd& wy);
}  // namespace detail

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace mpost
