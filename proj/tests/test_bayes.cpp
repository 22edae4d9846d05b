#include "mpost/bayes.hpp"
#include "mpost/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace mpost;

namespace {

void check_covers(const PartitionPlan& plan, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& g : plan.groups)
    for (std::size_t i : g) {
      REQUIRE(i < n);
      ++seen[i];
    }
  for (int s : seen) CHECK(s == 1);
}

}  // namespace

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.insert(derive_seed(42, s));
  CHECK(seeds.size() == 1000);
  CHECK(derive_seed(42, 3) == derive_seed(42, 3));
  CHECK(derive_seed(42, 3) != derive_seed(43, 3));
}

TEST_CASE("random partition") {
  const auto a = partition(10, 2, PartitionStrategy::RandomDisjoint, 9);
  REQUIRE(a.groups.size() == 2);
  CHECK(a.groups[0].size() == 5);
  CHECK(a.groups[1].size() == 5);
  check_covers(a, 10);
  const auto b = partition(10, 2, PartitionStrategy::RandomDisjoint, 9);
  CHECK(a.groups == b.groups);

  const auto c = partition(7, 3, PartitionStrategy::RandomDisjoint, 1);
  CHECK(c.groups[0].size() == 3);
  CHECK(c.groups[1].size() == 2);
  CHECK(c.groups[2].size() == 2);
}

TEST_CASE("grid-strided partition") {
  const auto p = partition(8, 2, PartitionStrategy::GridStrided);
  CHECK(p.groups[0] == std::vector<std::size_t>{0, 2, 4, 6});
  CHECK(p.groups[1] == std::vector<std::size_t>{1, 3, 5, 7});
  const auto j = partition_to_json(p);
  CHECK(j.at("strategy") == "grid_strided");
  CHECK(j.at("groups").size() == 2);
}

TEST_CASE("partition invariants over many plans") {
  for (std::size_t n = 2; n <= 40; n += 3) {
    for (std::size_t m = 1; 2 * m <= n; ++m) {
      for (auto strategy : {PartitionStrategy::RandomDisjoint, PartitionStrategy::GridStrided}) {
        const auto plan = partition(n, m, strategy, n * 31 + m);
        REQUIRE(plan.groups.size() == m);
        check_covers(plan, n);
        for (const auto& g : plan.groups) CHECK(g.size() >= n / m);
      }
    }
  }
}

TEST_CASE("partition rejects bad m") {
  CHECK_THROWS_AS(partition(10, 0, PartitionStrategy::RandomDisjoint), ConfigError);
  CHECK_THROWS_AS(partition(10, 6, PartitionStrategy::GridStrided), ConfigError);
}

TEST_CASE("conjugate subset posterior") {
  // l = 2 observations with mean 1, N(0, 1) prior, sigma2 = 1, multiplicity 3.
  const Eigen::MatrixXd data = (Eigen::MatrixXd(2, 1) << 0.5, 1.5).finished();
  const auto post = gaussian_subset_posterior(data, NormalPrior{Eigen::VectorXd::Zero(1), 1.0}, 1.0, 3);
  CHECK(post.mean[0] == doctest::Approx(6.0 / 7.0).epsilon(1e-15));
  CHECK(post.covariance(0, 0) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(post.multiplicity == 3);

  Eigen::MatrixXd hundred(100, 1);
  for (int i = 0; i < 100; ++i) hundred(i, 0) = 0.01 * i;
  const auto flat = gaussian_subset_posterior(hundred, FlatPrior{}, 1.0, 1);
  CHECK(flat.mean[0] == doctest::Approx(hundred.mean()));
  CHECK(flat.covariance(0, 0) == doctest::Approx(0.01));

  // multiplicity 1 is the ordinary conjugate posterior N(l/(l+s2) xbar, s2/(l+s2) I)
  Eigen::MatrixXd d2(5, 2);
  d2 << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  const auto plain = gaussian_subset_posterior(d2, NormalPrior{Eigen::VectorXd::Zero(2), 1.0}, 2.0, 1);
  const Eigen::VectorXd xbar = d2.colwise().mean().transpose();
  CHECK((plain.mean - 5.0 / 7.0 * xbar).norm() < 1e-14);
  CHECK((plain.covariance - 2.0 / 7.0 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("conjugate mean is a convex combination of prior mean and sample mean") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> normal(2.0, 3.0);
  std::uniform_real_distribution<double> unif(0.1, 5.0);
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXd data(7, 1);
    for (int i = 0; i < 7; ++i) data(i, 0) = normal(rng);
    const double mu0 = normal(rng);
    const auto post = gaussian_subset_posterior(
        data, NormalPrior{Eigen::VectorXd::Constant(1, mu0), unif(rng)}, unif(rng), 1 + t % 5);
    const double lo = std::min(mu0, data.mean()), hi = std::max(mu0, data.mean());
    CHECK(post.mean[0] >= lo - 1e-12);
    CHECK(post.mean[0] <= hi + 1e-12);
  }
}

TEST_CASE("conjugate variance shrinks with multiplicity") {
  const Eigen::MatrixXd data = Eigen::MatrixXd::Ones(4, 1);
  double prev = 1e300;
  for (int m = 1; m <= 10; ++m) {
    const double v =
        gaussian_subset_posterior(data, NormalPrior{Eigen::VectorXd::Zero(1), 1.0}, 1.0, m).covariance(0, 0);
    CHECK(v == doctest::Approx(1.0 / (4.0 * m + 1.0)).epsilon(1e-15));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("conjugate posterior errors") {
  const Eigen::MatrixXd data = Eigen::MatrixXd::Ones(3, 1);
  CHECK_THROWS_AS(gaussian_subset_posterior(Eigen::MatrixXd(0, 1), FlatPrior{}, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(gaussian_subset_posterior(data, FlatPrior{}, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(gaussian_subset_posterior(data, FlatPrior{}, 1.0, 0), ConfigError);
}

TEST_CASE("sample_gaussian") {
  GaussianPosterior unit{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 1};
  const auto draws = sample_gaussian(unit, 10000, 5);
  const double mean = draws.atoms().col(0).mean();
  const double var = (draws.atoms().col(0).array() - mean).square().sum() / 9999.0;
  CHECK(std::abs(mean) < 4.0 / 100.0);
  CHECK(std::abs(var - 1.0) < 0.1);
  CHECK(draws.weights()[0] == doctest::Approx(1e-4));

  const auto again = sample_gaussian(unit, 10000, 5);
  CHECK(again.atoms() == draws.atoms());

  GaussianPosterior tiny{Eigen::Vector2d(1.0, -2.0), 1e-18 * Eigen::MatrixXd::Identity(2, 2), 1};
  const auto t = sample_gaussian(tiny, 100, 1);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    CHECK((t.atoms().row(i).transpose() - tiny.mean).norm() < 1e-6);

  GaussianPosterior bad{Eigen::VectorXd::Zero(2), -Eigen::MatrixXd::Identity(2, 2), 1};
  CHECK_THROWS_AS(sample_gaussian(bad, 10, 1), NumericalError);
  CHECK_THROWS_AS(sample_gaussian(unit, 0, 1), ConfigError);
}

TEST_CASE("GP posterior at a single training point") {
  GPModel model;
  model.noise_variance = 0.25;
  model.grid = Eigen::VectorXd::Constant(1, 0.3);
  const auto post = gp_subset_posterior(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, 2.0),
                                        model, 1);
  CHECK(post.mean[0] == doctest::Approx(2.0 / 1.25).epsilon(1e-14));
  CHECK(post.covariance(0, 0) == doctest::Approx(1.0 - 1.0 / 1.25 + 1e-10).epsilon(1e-12));

  const auto sharp = gp_subset_posterior(Eigen::VectorXd::Constant(1, 0.3),
                                         Eigen::VectorXd::Constant(1, 2.0), model, 1000000);
  CHECK(sharp.mean[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sharp.covariance(0, 0) < 1e-6);
}

TEST_CASE("GP posterior far from data reverts to the prior") {
  GPModel model;
  model.length_scale = 0.1;
  model.grid = Eigen::VectorXd::Constant(1, 50.0);
  const auto post = gp_subset_posterior(Eigen::Vector2d(0.0, 0.1), Eigen::Vector2d(3.0, 4.0), model, 1);
  CHECK(std::abs(post.mean[0]) < 1e-12);
  CHECK(post.covariance(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("GP variance is non-increasing in multiplicity") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd xs(20), ys(20);
  for (int i = 0; i < 20; ++i) {
    xs[i] = unif(rng);
    ys[i] = std::sin(6 * xs[i]);
  }
  GPModel model;
  model.grid = Eigen::VectorXd::LinSpaced(15, 0.0, 1.0);
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(15, 1e300);
  for (int m : {1, 2, 5, 10, 50}) {
    const Eigen::VectorXd d = gp_subset_posterior(xs, ys, model, m).covariance.diagonal();
    CHECK(((d.array() <= prev.array() + 1e-12)).all());
    prev = d;
  }
}

TEST_CASE("GP posterior covariance is positive definite on random instances") {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 50);
  for (int t = 0; t < 100; ++t) {
    const int n = size(rng);
    Eigen::VectorXd xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = unif(rng);
      ys[i] = unif(rng);
    }
    GPModel model;
    model.length_scale = 0.05 + 0.5 * unif(rng);
    model.grid = Eigen::VectorXd::LinSpaced(30, 0.0, 1.0);
    const auto post = gp_subset_posterior(xs, ys, model, 1 + t % 10);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(post.covariance).info() == Eigen::Success);
    CHECK((post.covariance - post.covariance.transpose()).norm() == 0.0);
  }
}

TEST_CASE("GP argument checks") {
  GPModel model;
  model.grid = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
  CHECK_THROWS_AS(gp_subset_posterior(Eigen::Vector2d(0, 1), Eigen::VectorXd::Ones(3), model, 1), ConfigError);
  GPModel empty;
  CHECK_THROWS_AS(gp_subset_posterior(Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 1), empty, 1), ConfigError);
  model.length_scale = 0.0;
  CHECK_THROWS_AS(gp_subset_posterior(Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 1), model, 1), ConfigError);
}
