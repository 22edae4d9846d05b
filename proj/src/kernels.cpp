#include "mpost/kernels.hpp"

#include "mpost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpost {

KernelSpec::KernelSpec(std::variant<IsotropicGaussian, MahalanobisGaussian> v)
    : variant_(std::move(v)) {}

KernelSpec KernelSpec::isotropic(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ConfigError("kernel bandwidth must be positive and finite");
  }
  KernelSpec spec(IsotropicGaussian{bandwidth});
  spec.iso_scale_ = 1.0 / (std::sqrt(2.0) * bandwidth);
  return spec;
}

KernelSpec KernelSpec::mahalanobis(const Eigen::MatrixXd& scale) {
  if (scale.rows() == 0 || scale.rows() != scale.cols()) {
    throw ConfigError("Mahalanobis scale matrix must be square and nonempty");
  }
  if (!scale.allFinite()) throw ConfigError("Mahalanobis scale matrix must be finite");
  const double tol = 1e-12 * std::max(1.0, scale.cwiseAbs().maxCoeff());
  if ((scale - scale.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw ConfigError("Mahalanobis scale matrix must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("Mahalanobis scale matrix must be positive definite");
  }
  KernelSpec spec(MahalanobisGaussian{scale});
  spec.upper_ = llt.matrixU();
  return spec;
}

Eigen::Index KernelSpec::dim() const {
  if (const auto* m = std::get_if<MahalanobisGaussian>(&variant_)) return m->scale.rows();
  return 0;
}

void KernelSpec::check_dim(Eigen::Index p) const {
  const Eigen::Index d = dim();
  if (d != 0 && d != p) {
    throw ConfigError("kernel expects dimension " + std::to_string(d) + ", got " +
                      std::to_string(p));
  }
}

double KernelSpec::exponent(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (x.size() != y.size()) throw ConfigError("kernel arguments differ in dimension");
  check_dim(x.size());
  if (is_isotropic()) return (iso_scale_ * (x - y)).squaredNorm();
  return (upper_ * (x - y)).squaredNorm();
}

double KernelSpec::operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return std::exp(-exponent(x, y));
}

Eigen::MatrixXd KernelSpec::features(const Eigen::MatrixXd& atoms) const {
  check_dim(atoms.cols());
  if (is_isotropic()) return iso_scale_ * atoms;
  return atoms * upper_.transpose();
}

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return spec(x, y);
}

double rho_k(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  // 2 - 2 exp(-e) via expm1 keeps precision for nearby points.
  const double value = -2.0 * std::expm1(-spec.exponent(x, y));
  return std::sqrt(std::max(0.0, value));
}

namespace detail {

double feature_inner_product(const Eigen::MatrixXd& fx, const Eigen::VectorXd& wx,
                             const Eigen::MatrixXd& fy, const Eigen::VectorXd& wy) {
  const Eigen::Index nx = fx.rows();
  const Eigen::Index ny = fy.rows();
  const Eigen::Index p = fx.cols();
  // Column-major copies of the transposes give contiguous per-atom feature vectors.
  const Eigen::MatrixXd tx = fx.transpose();
  const Eigen::MatrixXd ty = fy.transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < nx; ++i) {
    if (wx[i] == 0.0) continue;
    const double* a = tx.data() + i * p;
    double row = 0.0;
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double* b = ty.data() + j * p;
      double d2 = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) {
        const double diff = a[k] - b[k];
        d2 += diff * diff;
      }
      row += wy[j] * std::exp(-d2);
    }
    total += wx[i] * row;
  }
  return total;
}

}  // namespace detail

namespace {

// Fixed content-based argument order for cross sums, so that swapping the two
// measures reproduces the same floating-point summation and results stay exactly symmetric.
bool ordered_first(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
  if (p.size() != q.size()) return p.size() < q.size();
  const auto lex = [](const double* a, const double* b, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
    }
    return 0;
  };
  if (const int c = lex(p.atoms().data(), q.atoms().data(), p.atoms().size()); c != 0) return c < 0;
  return lex(p.weights().data(), q.weights().data(), p.weights().size()) <= 0;
}

}  // namespace

double inner_product(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const KernelSpec& spec) {
  if (p.dim() != q.dim()) throw ConfigError("measures differ in dimension");
  const EmpiricalMeasure& a = ordered_first(p, q) ? p : q;
  const EmpiricalMeasure& b = &a == &p ? q : p;
  return detail::feature_inner_product(spec.features(a.atoms()), a.weights(),
                                       spec.features(b.atoms()), b.weights());
}

double mmd_squared(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const KernelSpec& spec) {
  if (p.dim() != q.dim()) throw ConfigError("measures differ in dimension");
  const EmpiricalMeasure& a = ordered_first(p, q) ? p : q;
  const EmpiricalMeasure& b = &a == &p ? q : p;
  const Eigen::MatrixXd fa = spec.features(a.atoms());
  const Eigen::MatrixXd fb = spec.features(b.atoms());
  const double aa = detail::feature_inner_product(fa, a.weights(), fa, a.weights());
  const double bb = detail::feature_inner_product(fb, b.weights(), fb, b.weights());
  const double ab = detail::feature_inner_product(fa, a.weights(), fb, b.weights());
  return std::max(0.0, aa + bb - 2.0 * ab);
}

double mmd(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const KernelSpec& spec) {
  return std::sqrt(mmd_squared(p, q, spec));
}

double median_bandwidth(const Eigen::MatrixXd& points) {
  constexpr Eigen::Index max_points = 1000;
  const Eigen::Index n = points.rows();
  const Eigen::Index stride = std::max<Eigen::Index>(1, (n + max_points - 1) / max_points);

  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n; i += stride) idx.push_back(i);

  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() > 0 ? idx.size() - 1 : 0) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      dists.push_back((points.row(idx[a]) - points.row(idx[b])).norm());
    }
  }

  auto median_of = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
  };

  std::vector<double> positive;
  for (double d : dists) {
    if (d > 0.0) positive.push_back(d);
  }
  if (positive.empty()) {
    throw ConfigError("median bandwidth needs at least two distinct points");
  }
  const double h = median_of(dists);
  // Mostly coincident inputs can have a zero median; fall back to the positive pairs.
  return h > 0.0 ? h : median_of(std::move(positive));
}

namespace {

double spd_logdet(const Eigen::MatrixXd& s, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw ConfigError(std::string(what) + " is not symmetric positive definite");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double hellinger_gaussian(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                          const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2) {
  const Eigen::Index p = mu1.size();
  if (mu2.size() != p || sigma1.rows() != p || sigma1.cols() != p || sigma2.rows() != p ||
      sigma2.cols() != p) {
    throw ConfigError("hellinger_gaussian: inconsistent dimensions");
  }
  const Eigen::MatrixXd avg = 0.5 * (sigma1 + sigma2);
  const double ld1 = spd_logdet(sigma1, "sigma1");
  const double ld2 = spd_logdet(sigma2, "sigma2");
  const Eigen::LLT<Eigen::MatrixXd> llt(avg);
  const double ld_avg = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::VectorXd delta = mu1 - mu2;
  const double quad = delta.dot(llt.solve(delta));

  const double log_affinity = 0.25 * (ld1 + ld2) - 0.5 * ld_avg - quad / 8.0;
  const double h2 = -std::expm1(std::min(0.0, log_affinity));
  return std::sqrt(std::max(0.0, h2));
}

double hellinger_expfam(const std::function<double(const Eigen::VectorXd&)>& log_partition,
                        const Eigen::VectorXd& theta1, const Eigen::VectorXd& theta2) {
  if (theta1.size() != theta2.size()) throw ConfigError("hellinger_expfam: dimension mismatch");
  const double g1 = log_partition(theta1);
  const double g2 = log_partition(theta2);
  const double gm = log_partition(0.5 * (theta1 + theta2));
  if (!std::isfinite(g1) || !std::isfinite(g2) || !std::isfinite(gm)) {
    throw NumericalError("log-partition is not finite at the requested parameters");
  }
  const double bracket = g1 + g2 - 2.0 * gm;
  const double h2 = -std::expm1(-0.5 * std::max(0.0, bracket));
  return std::sqrt(std::max(0.0, h2));
}

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  if (const auto* iso = std::get_if<IsotropicGaussian>(&spec.variant())) {
    return {{"type", "gaussian"}, {"h", iso->bandwidth}};
  }
  const auto& a = std::get<MahalanobisGaussian>(spec.variant()).scale;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
    rows.push_back(row);
  }
  return {{"type", "mahalanobis"}, {"A", std::move(rows)}};
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "gaussian") return KernelSpec::isotropic(j.at("h").get<double>());
    if (type != "mahalanobis") throw ConfigError("unknown kernel type '" + type + "'");

    const auto& a = j.at("A");
    std::vector<double> flat;
    if (!a.empty() && a.front().is_array()) {
      for (const auto& row : a) {
        if (row.size() != a.size()) throw ConfigError("Mahalanobis matrix must be square");
        for (const auto& v : row) flat.push_back(v.get<double>());
      }
    } else {
      flat = a.get<std::vector<double>>();
    }
    const auto p = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
    if (p * p != static_cast<Eigen::Index>(flat.size()) || p == 0) {
      throw ConfigError("Mahalanobis matrix must be square");
    }
    const Eigen::MatrixXd scale =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            flat.data(), p, p);
    return KernelSpec::mahalanobis(scale);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed kernel JSON: ") + e.what());
  }
}

}  // namespace mpost
