#include "mpost/medians.hpp"

#include "mpost/errors.hpp"
#include "mpost/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace mpost {
namespace {

constexpr double kDistanceFloor = 1e-10;

}  // namespace

InnerProductMatrix InnerProductMatrix::from_gram(Eigen::MatrixXd gram) {
  if (gram.rows() == 0 || gram.rows() != gram.cols()) {
    throw ConfigError("inner product matrix must be square and nonempty");
  }
  if (!gram.allFinite()) throw ConfigError("inner product matrix has non-finite entries");
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ConfigError("inner product matrix is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8) {
    throw ConfigError("inner product matrix is not positive semidefinite");
  }
  return InnerProductMatrix(std::move(gram));
}

InnerProductMatrix inner_product_matrix(std::span<const EmpiricalMeasure> measures,
                                        const KernelSpec& spec, int threads) {
  const std::size_t m = measures.size();
  if (m == 0) throw ConfigError("inner_product_matrix needs at least one measure");
  const Eigen::Index p = measures.front().dim();
  std::vector<Eigen::MatrixXd> features(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (measures[i].dim() != p) throw ConfigError("measures differ in dimension");
    features[i] = spec.features(measures[i].atoms());
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    values[k] = detail::feature_inner_product(features[i], measures[i].weights(), features[j],
                                              measures[j].weights());
  });

  Eigen::MatrixXd gram(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs[k].first);
    const auto j = static_cast<Eigen::Index>(pairs[k].second);
    gram(i, j) = values[k];
    gram(j, i) = values[k];
  }
  if (!gram.allFinite()) {
    throw NumericalError("kernel Gram matrix is not finite (feature map overflow)");
  }
  if (gram.diagonal().maxCoeff() > 1.0 + 1e-10) {
    throw NumericalError("kernel Gram diagonal exceeds 1");
  }
  return InnerProductMatrix::from_gram(std::move(gram));
}

Eigen::VectorXd distances_to_points(const InnerProductMatrix& s, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd& g = s.values();
  const Eigen::VectorXd gw = g * w;
  const double wgw = w.dot(gw);
  Eigen::VectorXd d(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    d[i] = std::sqrt(std::max(0.0, wgw - 2.0 * gw[i] + g(i, i)));
  }
  return d;
}

double median_objective(const InnerProductMatrix& s, const Eigen::VectorXd& w) {
  return distances_to_points(s, w).sum();
}

WeiszfeldResult weiszfeld(const InnerProductMatrix& s, const WeiszfeldOptions& options) {
  if (!(options.epsilon > 0.0)) throw ConfigError("Weiszfeld epsilon must be positive");
  if (options.max_iter < 1) throw ConfigError("Weiszfeld max_iter must be at least 1");

  const Eigen::Index m = s.size();
  WeiszfeldResult result;
  result.weights = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  result.objective_trace.push_back(median_objective(s, result.weights));
  if (m == 1) {
    result.converged = true;
    return result;
  }

  for (int t = 1; t <= options.max_iter; ++t) {
    const Eigen::VectorXd inv =
        distances_to_points(s, result.weights).cwiseMax(kDistanceFloor).cwiseInverse();
    const Eigen::VectorXd next = inv / inv.sum();
    const Eigen::VectorXd step = next - result.weights;
    const double moved = std::sqrt(std::max(0.0, step.dot(s.values() * step)));

    result.weights = next;
    result.iterations = t;
    result.objective_trace.push_back(median_objective(s, result.weights));
    if (moved <= options.epsilon) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Eigen::VectorXd threshold_weights(const Eigen::VectorXd& w) {
  const Eigen::Index m = w.size();
  if (m == 0 || !w.allFinite() || (w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-9) {
    throw ConfigError("threshold_weights expects a probability vector");
  }
  const double cutoff = 1.0 / (2.0 * static_cast<double>(m));
  if ((w.array() >= cutoff).all()) return w;  // nothing dropped: already a probability vector
  Eigen::VectorXd kept = (w.array() >= cutoff).select(w, 0.0);
  return kept / kept.sum();
}

MetricMedianResult metric_median(const Eigen::MatrixXd& distances) {
  const Eigen::Index m = distances.rows();
  if (m == 0 || distances.cols() != m) throw ConfigError("distance matrix must be square");
  if (!distances.allFinite()) throw ConfigError("distance matrix has non-finite entries");
  const double tol = 1e-12 * std::max(1.0, distances.cwiseAbs().maxCoeff());
  if ((distances.array() < 0.0).any()) throw ConfigError("distance matrix has negative entries");
  if ((distances - distances.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw ConfigError("distance matrix is not symmetric");
  }
  if (distances.diagonal().cwiseAbs().maxCoeff() > tol) {
    throw ConfigError("distance matrix has a nonzero diagonal");
  }

  // The ball around j holds more than m/2 points once its radius reaches the
  // (floor(m/2) + 1)-th smallest entry of column j, counting j itself.
  const auto rank = static_cast<std::size_t>(m / 2);
  MetricMedianResult best{0, 0.0};
  double best_radius = 0.0;
  std::vector<double> column(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) column[static_cast<std::size_t>(i)] = distances(i, j);
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(rank),
                     column.end());
    const double radius = column[rank];
    if (j == 0 || radius < best_radius) {
      best_radius = radius;
      best.index = j;
    }
  }
  best.eps_star = best_radius / 2.0;
  return best;
}

double psi(double alpha, double q) {
  if (!(q > 0.0 && q < alpha && alpha < 1.0)) {
    throw ConfigError("psi requires 0 < q < alpha < 1");
  }
  return (1.0 - alpha) * std::log((1.0 - alpha) / (1.0 - q)) + alpha * std::log(alpha / q);
}

void ConcentrationParams::validate() const {
  if (!(q > 0.0 && q < alpha && alpha < 0.5)) {
    throw ConfigError("concentration parameters need 0 < q < alpha < 1/2");
  }
  if (!(gamma >= 0.0 && gamma < (alpha - q) / (1.0 - q))) {
    throw ConfigError("gamma must lie in [0, (alpha - q)/(1 - q))");
  }
  if (m < 1) throw ConfigError("m must be at least 1");
}

double ConcentrationParams::c_alpha() const {
  return (1.0 - alpha) * std::sqrt(1.0 / (1.0 - 2.0 * alpha));
}

double ConcentrationParams::geometric_bound() const {
  const double effective = (alpha - gamma) / (1.0 - gamma);
  return std::exp(-m * (1.0 - gamma) * psi(effective, q));
}

double ConcentrationParams::metric_bound() const {
  const double effective = (0.5 - gamma) / (1.0 - gamma);
  return std::exp(-m * (1.0 - gamma) * psi(effective, q));
}

Eigen::MatrixXd mmd_distance_matrix(std::span<const EmpiricalMeasure> measures,
                                    const KernelSpec& spec, int threads) {
  const InnerProductMatrix s = inner_product_matrix(measures, spec, threads);
  const Eigen::MatrixXd& g = s.values();
  const Eigen::Index m = g.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      d(i, j) = d(j, i) = std::sqrt(std::max(0.0, g(i, i) + g(j, j) - 2.0 * g(i, j)));
    }
  }
  return d;
}

int select_m(std::span<const MCandidate> candidates, const KernelSpec& spec, int threads) {
  if (candidates.empty()) throw ConfigError("select_m needs at least one candidate");
  std::vector<EmpiricalMeasure> measures;
  measures.reserve(candidates.size());
  for (const auto& c : candidates) measures.push_back(c.posterior);
  const MetricMedianResult med = metric_median(mmd_distance_matrix(measures, spec, threads));
  return candidates[static_cast<std::size_t>(med.index)].m_value;
}

nlohmann::json weiszfeld_to_json(const WeiszfeldResult& result) {
  std::vector<double> w(result.weights.data(), result.weights.data() + result.weights.size());
  return {{"weights", w},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"objective_trace", result.objective_trace}};
}

}  // namespace mpost
