#include "doctest.h"
#include "moodscope/gp.hpp"
#include "oracles.hpp"

using namespace moodscope;

namespace {

Eigen::VectorXd grid(int n) { return Eigen::VectorXd::LinSpaced(n, 0.0, n - 1.0); }

GpFit fit_with_lengthscale(double l) {
  GpFit f;
  f.hyper.lengthscale = l;
  return f;
}

}  // namespace

TEST_CASE("kernel values") {
  const Eigen::VectorXd x = Eigen::Vector3d(0.0, 1.0, 3.0);
  const auto k = squared_exponential<double>(x, 2.0, 1.5);
  CHECK(k(0, 0) == doctest::Approx(1.5));
  CHECK(k(0, 1) == doctest::Approx(1.5 * std::exp(-1.0 / 8.0)));
  CHECK(k(2, 0) == doctest::Approx(1.5 * std::exp(-9.0 / 8.0)));
  CHECK(k.isApprox(k.transpose()));
}

TEST_CASE("log marginal likelihood matches the Gaussian density") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(0, 10));
    const Eigen::VectorXd x = grid(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.normal();
    const GpLogParams<double> p(std::log(0.5 + 5 * rng.uniform()), std::log(0.2 + rng.uniform()), std::log(0.05 + rng.uniform()));
    Eigen::MatrixXd k = squared_exponential<double>(x, std::exp(p(0)), std::exp(p(1)));
    k.diagonal().array() += std::exp(p(2));
    const double direct = -0.5 * y.dot(k.inverse() * y) - 0.5 * std::log(k.determinant()) - 0.5 * n * std::log(2 * M_PI);
    const auto e = log_marginal_likelihood<double>(x, y, p);
    REQUIRE(e);
    // Jitter of 1e-9 perturbs the value only slightly.
    CHECK(e->value == doctest::Approx(direct).epsilon(1e-6));
  }
}

TEST_CASE("analytic gradient agrees with finite differences") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = grid(30);
    const Eigen::VectorXd y = oracle::sample_gp(rng, x, 1.0 + 6 * rng.uniform(), 1.0, 0.1);
    const GpLogParams<double> p(std::log(0.5 + 10 * rng.uniform()), std::log(0.1 + 2 * rng.uniform()),
                                std::log(0.01 + rng.uniform()));
    const auto e = log_marginal_likelihood<double>(x, y, p);
    REQUIRE(e);
    CHECK(oracle::relative_error(e->gradient, oracle::gp_fd_gradient(x, y, p)) <= 1e-4);
  }
}

TEST_CASE("long-double instantiation agrees") {
  Rng rng(2);
  const Eigen::VectorXd x = grid(20);
  const Eigen::VectorXd y = oracle::sample_gp(rng, x, 3.0, 1.0, 0.1);
  const GpLogParams<double> p(std::log(3.0), 0.0, std::log(0.1));
  const auto d = log_marginal_likelihood<double>(x, y, p);
  const auto ld = log_marginal_likelihood<long double>(x.cast<long double>(), y.cast<long double>(), p.cast<long double>());
  REQUIRE(d);
  REQUIRE(ld);
  CHECK(d->value == doctest::Approx(static_cast<double>(ld->value)).epsilon(1e-9));
}

TEST_CASE("lengthscale recovery on a smooth sample") {
  Rng rng(101);
  std::vector<double> ls;
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd x = grid(122);
    const auto f = fit_lengthscale(x, oracle::sample_gp(rng, x, 3.0, 1.0, 0.1));
    CHECK_FALSE(f.degenerate);
    ls.push_back(f.hyper.lengthscale);
  }
  CHECK(median(ls) == doctest::Approx(3.0).epsilon(0.25));
}

TEST_CASE("best start is at least as good as every initialization") {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd x = grid(60);
    const Eigen::VectorXd y = oracle::sample_gp(rng, x, 1.0 + 10 * rng.uniform(), 1.0, 0.2);
    const auto f = fit_lengthscale(x, y);
    for (double start : start_log_likelihoods(x, y)) CHECK(f.log_marginal_likelihood >= start - 1e-9);
    CHECK(f.hyper.lengthscale >= 0.1 - 1e-12);
    CHECK(f.hyper.lengthscale <= 100.0 + 1e-9);
  }
}

TEST_CASE("constant and invalid targets") {
  const Eigen::VectorXd x = grid(20);
  const auto f = fit_lengthscale(x, Eigen::VectorXd::Constant(20, 0.7));
  CHECK(f.degenerate);
  CHECK(f.hyper.lengthscale == doctest::Approx(100.0));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(20);
  y(3) = std::nan("");
  CHECK_THROWS_AS(fit_lengthscale(x, y), std::invalid_argument);
  CHECK_THROWS_AS(fit_lengthscale(grid(1), Eigen::VectorXd::Zero(1)), std::invalid_argument);
}

TEST_CASE("users with fewer than ten posts are excluded") {
  UserTimeline t{"u", Date{std::chrono::year{2012} / 6 / 1}, 30, {}};
  DailySeries s;
  s.days.resize(365);
  for (int i = 0; i < 9; ++i) t.posts.push_back({"u", {}, "", std::nullopt});
  CHECK_FALSE(gp_inputs(t, s));
  t.posts.push_back({"u", {}, "", std::nullopt});
  const auto in = gp_inputs(t, s);
  REQUIRE(in);
  CHECK(in->inputs.size() == 122);
  CHECK(in->targets.size() == 122);
  CHECK(in->inputs(121) == 121.0);
}

TEST_CASE("group comparison") {
  std::vector<GpFit> fits;
  std::vector<Ternary> labels;
  for (double l : {1.0, 2.0, 3.0}) {
    fits.push_back(fit_with_lengthscale(l));
    labels.push_back(Ternary::Low);
  }
  for (double l : {4.0, 5.0, 6.0}) {
    fits.push_back(fit_with_lengthscale(l));
    labels.push_back(Ternary::High);
  }
  auto excluded = fit_with_lengthscale(100.0);
  excluded.excluded = true;
  fits.push_back(excluded);
  labels.push_back(Ternary::High);

  const auto c = compare_groups(fits, labels);
  CHECK(c.median_lengthscale.at(Ternary::Low) == 2.0);
  CHECK(c.median_lengthscale.at(Ternary::High) == 5.0);
  CHECK(c.group_size.at(Ternary::High) == 3);
  REQUIRE(c.pairs.size() == 1);
  CHECK(c.pairs[0].first == Ternary::Low);
  CHECK(c.pairs[0].test.u == 0.0);
  CHECK(c.pairs[0].test.p_two_sided == doctest::Approx(0.1));

  labels.assign(fits.size(), Ternary::Low);
  CHECK_THROWS_AS(compare_groups(fits, labels), std::invalid_argument);
}
