#include "mpost/errors.hpp"
#include "mpost/kernels.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mpost;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

EmpiricalMeasure to_measure(const oracle::Atoms& a) {
  return make_empirical(a.points, a.weights);
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int p) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd b(p, p);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
  return b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

}  // namespace

TEST_CASE("kernel values") {
  const auto iso = KernelSpec::isotropic(1.0);
  CHECK(iso(vec({0.3}), vec({0.3})) == 1.0);
  CHECK(iso(vec({0.0}), vec({1.0})) == doctest::Approx(0.6065306597).epsilon(1e-10));
  const auto mah = KernelSpec::mahalanobis(Eigen::MatrixXd::Constant(1, 1, 1.0 / 8.0));
  CHECK(mah(vec({0.0}), vec({2.0})) == doctest::Approx(0.6065306597).epsilon(1e-10));
  CHECK(eval_kernel(iso, vec({1.0, 2.0}), vec({-1.0, 0.5})) ==
        eval_kernel(iso, vec({-1.0, 0.5}), vec({1.0, 2.0})));
}

TEST_CASE("kernel construction errors") {
  CHECK_THROWS_AS(KernelSpec::isotropic(0.0), ConfigError);
  CHECK_THROWS_AS(KernelSpec::isotropic(-1.0), ConfigError);
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(KernelSpec::mahalanobis(asym), ConfigError);
  Eigen::Matrix2d indefinite;
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(KernelSpec::mahalanobis(indefinite), ConfigError);
  const auto mah = KernelSpec::mahalanobis(Eigen::Matrix2d::Identity());
  CHECK_THROWS_AS(mah(vec({0.0}), vec({1.0})), ConfigError);
  CHECK_THROWS_AS(rho_k(KernelSpec::isotropic(1.0), vec({0.0}), vec({1.0, 2.0})), ConfigError);
}

TEST_CASE("rho_k") {
  const auto iso = KernelSpec::isotropic(1.0);
  CHECK(rho_k(iso, vec({1.0}), vec({1.0})) == 0.0);
  const double expected = std::sqrt(2.0 - 2.0 * std::exp(-0.5));  // 0.8870956...
  CHECK(rho_k(iso, vec({0.0}), vec({1.0})) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rho_k(iso, vec({0.0}), vec({1.0})) == doctest::Approx(0.8870956434).epsilon(1e-9));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd x = vec({normal(rng), normal(rng)});
    const Eigen::VectorXd y = vec({normal(rng), normal(rng)});
    CHECK(std::abs(rho_k(iso, x, y) - mmd(dirac(x), dirac(y), iso)) < 1e-12);
  }
}

TEST_CASE("inner product and mmd worked values") {
  const auto iso = KernelSpec::isotropic(1.0);
  const auto p = make_empirical({{0.0}, {1.0}});
  const auto q = make_empirical({{0.0}});
  CHECK(inner_product(q, q, iso) == 1.0);
  CHECK(inner_product(p, q, iso) == doctest::Approx(0.5 + 0.5 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(inner_product(p, q, iso) == doctest::Approx(0.8032653).epsilon(1e-7));
  CHECK(mmd_squared(p, q, iso) == doctest::Approx(0.1967347).epsilon(1e-6));
  CHECK(mmd_squared(dirac(vec({0.0})), dirac(vec({2.0})), iso) ==
        doctest::Approx(2.0 - 2.0 * std::exp(-2.0)));
  CHECK(mmd_squared(p, p, iso) == 0.0);
  CHECK(mmd(p, p, iso) == 0.0);
}

TEST_CASE("inner product matches a direct double sum") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const auto a = oracle::random_atoms(rng, 7, 3, 0.0, 1.0);
    const auto b = oracle::random_atoms(rng, 5, 3, 0.5, 1.5);
    const double h = 0.7;
    CHECK(std::abs(inner_product(to_measure(a), to_measure(b), KernelSpec::isotropic(h)) -
                   oracle::gauss_inner(a, b, h)) < 1e-13);
  }
}

TEST_CASE("mmd_squared decomposes into inner products") {
  std::mt19937_64 rng(19);
  const auto k = KernelSpec::isotropic(1.3);
  for (int t = 0; t < 50; ++t) {
    const auto p = to_measure(oracle::random_atoms(rng, 6, 2, 0.0, 1.0));
    const auto q = to_measure(oracle::random_atoms(rng, 9, 2, 0.3, 1.0));
    const double direct = inner_product(p, p, k) + inner_product(q, q, k) - 2 * inner_product(p, q, k);
    CHECK(std::abs(mmd_squared(p, q, k) - std::max(0.0, direct)) < 1e-12);
  }
}

TEST_CASE("mmd metric axioms on random triples") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> sizes(1, 8);
  const auto k = KernelSpec::isotropic(1.0);
  for (int t = 0; t < 200; ++t) {
    const auto p = to_measure(oracle::random_atoms(rng, sizes(rng), 2, 0.0, 1.0));
    const auto q = to_measure(oracle::random_atoms(rng, sizes(rng), 2, 0.5, 1.0));
    const auto r = to_measure(oracle::random_atoms(rng, sizes(rng), 2, -0.5, 2.0));
    const double pq = mmd(p, q, k), qp = mmd(q, p, k), qr = mmd(q, r, k), pr = mmd(p, r, k);
    CHECK(pq == qp);
    CHECK(pq >= 0.0);
    CHECK(pr <= pq + qr + 1e-9);
  }
}

TEST_CASE("Gram matrices are positive semidefinite for both kernels") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd pts(40, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = normal(rng);
  for (const auto& k : {KernelSpec::isotropic(0.8), KernelSpec::mahalanobis(random_spd(rng, 3))}) {
    Eigen::MatrixXd g(40, 40);
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 40; ++j) g(i, j) = k(pts.row(i).transpose(), pts.row(j).transpose());
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("median_bandwidth") {
  CHECK(median_bandwidth((Eigen::MatrixXd(2, 1) << 0, 1).finished()) == 1.0);
  CHECK(median_bandwidth((Eigen::MatrixXd(3, 1) << 0, 1, 2).finished()) == 1.0);
  CHECK_THROWS_AS(median_bandwidth(Eigen::MatrixXd::Zero(3, 1)), ConfigError);
  CHECK_THROWS_AS(median_bandwidth(Eigen::MatrixXd::Zero(1, 1)), ConfigError);
  Eigen::MatrixXd many(5000, 1);
  for (int i = 0; i < 5000; ++i) many(i, 0) = i;
  const double h = median_bandwidth(many);
  CHECK(h > 1000.0);
  CHECK(h < 2000.0);
}

TEST_CASE("Hellinger distance between Gaussians") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  CHECK(hellinger_gaussian(vec({0.0}), one, vec({0.0}), one) == 0.0);
  const double h = hellinger_gaussian(vec({0.0}), one, vec({2.0}), one);
  CHECK(h == doctest::Approx(std::sqrt(1.0 - std::exp(-0.5))).epsilon(1e-13));  // 0.6272713...
  CHECK(h == doctest::Approx(0.6272713450).epsilon(1e-9));

  std::mt19937_64 rng(31);
  const Eigen::MatrixXd s1 = random_spd(rng, 3), s2 = random_spd(rng, 3);
  const Eigen::VectorXd m1 = vec({0.1, 0.2, 0.3}), m2 = vec({1.0, -1.0, 0.0});
  CHECK(hellinger_gaussian(m1, s1, m2, s2) == doctest::Approx(hellinger_gaussian(m2, s2, m1, s1)));
  CHECK(hellinger_gaussian(m1, s1, m2, s2) < 1.0);
  CHECK_THROWS_AS(hellinger_gaussian(vec({0.0}), -one, vec({0.0}), one), ConfigError);
}

TEST_CASE("Hellinger equals rho_k / sqrt 2 under the matched kernel") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd sigma = random_spd(rng, 2);
    const Eigen::VectorXd a = vec({normal(rng), normal(rng)}), b = vec({normal(rng), normal(rng)});
    const auto k = KernelSpec::mahalanobis(sigma.inverse() / 8.0);
    CHECK(std::abs(hellinger_gaussian(a, sigma, b, sigma) - rho_k(k, a, b) / std::sqrt(2.0)) < 1e-10);
  }
}

TEST_CASE("Hellinger for exponential families") {
  const auto gauss = [](const Eigen::VectorXd& t) { return 0.5 * t.squaredNorm(); };
  CHECK(hellinger_expfam(gauss, vec({1.0}), vec({1.0})) == 0.0);
  const double h = hellinger_expfam(gauss, vec({0.0}), vec({2.0}));
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  CHECK(std::abs(h - hellinger_gaussian(vec({0.0}), one, vec({2.0}), one)) < 1e-12);
  const auto affine = [](const Eigen::VectorXd& t) { return 3.0 * t.sum() + 1.0; };
  CHECK(hellinger_expfam(affine, vec({-4.0, 1.0}), vec({7.0, 2.0})) == doctest::Approx(0.0));
  const auto broken = [](const Eigen::VectorXd&) { return std::nan(""); };
  CHECK_THROWS_AS(hellinger_expfam(broken, vec({0.0}), vec({1.0})), NumericalError);
}

TEST_CASE("kernel JSON round trip") {
  const auto iso = kernel_from_json(kernel_to_json(KernelSpec::isotropic(0.25)));
  CHECK(std::get<IsotropicGaussian>(iso.variant()).bandwidth == 0.25);
  Eigen::Matrix2d a;
  a << 2, 0.5, 0.5, 1;
  const auto mah = kernel_from_json(kernel_to_json(KernelSpec::mahalanobis(a)));
  CHECK(std::get<MahalanobisGaussian>(mah.variant()).scale == Eigen::MatrixXd(a));
  const auto flat = kernel_from_json(nlohmann::json::parse(R"({"type":"mahalanobis","A":[2,0.5,0.5,1]})"));
  CHECK(std::get<MahalanobisGaussian>(flat.variant()).scale == Eigen::MatrixXd(a));
  CHECK_THROWS_AS(kernel_from_json(nlohmann::json::parse(R"({"type":"laplace","h":1})")), ConfigError);
}
