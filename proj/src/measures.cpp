#include "mpost/measures.hpp"

#include "mpost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mpost {

EmpiricalMeasure make_empirical(Eigen::MatrixXd atoms, std::optional<Eigen::VectorXd> weights) {
  const Eigen::Index n = atoms.rows();
  if (n == 0) throw ConfigError("empirical measure needs at least one atom");
  if (atoms.cols() == 0) throw ConfigError("atoms must have dimension >= 1");
  if (!atoms.allFinite()) throw ConfigError("atoms must be finite");

  Eigen::VectorXd w;
  if (!weights) {
    w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    w = std::move(*weights);
    if (w.size() != n) {
      throw ConfigError("weight count " + std::to_string(w.size()) + " does not match atom count " +
                        std::to_string(n));
    }
    if (!w.allFinite()) throw ConfigError("weights must be finite");
    if ((w.array() < 0.0).any()) throw ConfigError("weights must be nonnegative");
    const double total = w.sum();
    if (!(total > 0.0)) throw ConfigError("weights are all zero");
    w /= total;
  }
  return EmpiricalMeasure(std::move(atoms), std::move(w));
}

EmpiricalMeasure make_empirical(const std::vector<std::vector<double>>& atoms,
                                const std::vector<double>& weights) {
  if (atoms.empty()) throw ConfigError("empirical measure needs at least one atom");
  const std::size_t p = atoms.front().size();
  Eigen::MatrixXd mat(static_cast<Eigen::Index>(atoms.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != p) {
      throw ConfigError("atom " + std::to_string(i) + " has dimension " +
                        std::to_string(atoms[i].size()) + ", expected " + std::to_string(p));
    }
    for (std::size_t k = 0; k < p; ++k) {
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = atoms[i][k];
    }
  }
  if (weights.empty()) return make_empirical(std::move(mat));
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                        static_cast<Eigen::Index>(weights.size()));
  return make_empirical(std::move(mat), std::move(w));
}

EmpiricalMeasure make_empirical(std::initializer_list<std::initializer_list<double>> atoms,
                                std::initializer_list<double> weights) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : atoms) rows.emplace_back(row);
  return make_empirical(rows, std::vector<double>(weights));
}

EmpiricalMeasure dirac(const Eigen::VectorXd& point) {
  return make_empirical(Eigen::MatrixXd(point.transpose()));
}

EmpiricalMeasure mixture(std::span<const EmpiricalMeasure> measures,
                         const Eigen::VectorXd& mix_weights) {
  if (measures.empty()) throw ConfigError("mixture of zero measures");
  if (static_cast<std::size_t>(mix_weights.size()) != measures.size()) {
    throw ConfigError("mixture weight count does not match measure count");
  }
  if (!mix_weights.allFinite() || (mix_weights.array() < 0.0).any() ||
      std::abs(mix_weights.sum() - 1.0) > 1e-9) {
    throw ConfigError("mixture weights must be nonnegative and sum to 1");
  }

  const Eigen::Index p = measures.front().dim();
  Eigen::Index total = 0;
  for (const auto& m : measures) {
    if (m.dim() != p) throw ConfigError("mixture components differ in dimension");
    total += m.size();
  }

  Eigen::MatrixXd atoms(total, p);
  Eigen::VectorXd weights(total);
  Eigen::Index row = 0;
  for (std::size_t j = 0; j < measures.size(); ++j) {
    const auto& m = measures[j];
    atoms.middleRows(row, m.size()) = m.atoms();
    weights.segment(row, m.size()) = mix_weights[static_cast<Eigen::Index>(j)] * m.weights();
    row += m.size();
  }
  return make_empirical(std::move(atoms), std::move(weights));
}

double weighted_quantile(const EmpiricalMeasure& measure, double q) {
  if (measure.dim() != 1) throw ConfigError("weighted_quantile needs a one-dimensional measure");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");

  const auto& x = measure.atoms();
  const auto& w = measure.weights();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(measure.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x(a, 0) < x(b, 0); });

  // Slack absorbs roundoff in the running sum (e.g. q = 1 reached as 0.9999999999999998).
  constexpr double slack = 1e-12;
  double cumulative = 0.0;
  for (const Eigen::Index i : order) {
    cumulative += w[i];
    if (cumulative >= q - slack) return x(i, 0);
  }
  return x(order.back(), 0);
}

EmpiricalMeasure marginal(const EmpiricalMeasure& measure, Eigen::Index coordinate) {
  if (coordinate < 0 || coordinate >= measure.dim()) {
    throw ConfigError("marginal coordinate out of range");
  }
  return make_empirical(Eigen::MatrixXd(measure.atoms().col(coordinate)), measure.weights());
}

EmpiricalMeasure prune_zero_weights(const EmpiricalMeasure& measure) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < measure.size(); ++i) {
    if (measure.weights()[i] > 0.0) keep.push_back(i);
  }
  Eigen::MatrixXd atoms(static_cast<Eigen::Index>(keep.size()), measure.dim());
  Eigen::VectorXd weights(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    atoms.row(static_cast<Eigen::Index>(r)) = measure.atoms().row(keep[r]);
    weights[static_cast<Eigen::Index>(r)] = measure.weights()[keep[r]];
  }
  return make_empirical(std::move(atoms), std::move(weights));
}

}  // namespace mpost
