#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "s3n/predict.hpp"

using namespace s3n;

namespace {

std::vector<PredictionRecord> run_predict(const std::vector<SitePoint>& preds,
                                          const std::vector<SitePoint>& obs,
                                          const Eigen::VectorXd& y, const CovarianceParams& params,
                                          int m, const StreamNetwork& net) {
  auto with_y = obs;
  for (std::size_t i = 0; i < with_y.size(); ++i) with_y[i].y = y[static_cast<int>(i)];
  auto nbrs = predict_neighbors(preds, with_y, m, net);
  return predict(preds, with_y, params, nbrs, net);
}

}  // namespace

TEST_CASE("noiseless prediction at an observed location interpolates exactly") {
  auto net = fixtures::y_network();
  std::vector<SitePoint> obs{fixtures::site_on(net, 1, 0.5, 1), fixtures::site_on(net, 3, 0.5, 2)};
  CovarianceParams p;
  p.sigma2 = 2.0;
  p.lambda = 8.0;
  p.tau2 = 0.0;
  p.beta = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd y(2);
  y << 3.0, -1.0;
  std::vector<SitePoint> preds{fixtures::site_on(net, 1, 0.5, 10)};  // co-located with obs 1

  auto recs = run_predict(preds, obs, y, p, 2, net);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].mean == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(recs[0].var == doctest::Approx(0.0).epsilon(1e-8));
  CHECK_FALSE(recs[0].no_neighbors);
}

TEST_CASE("with a nugget the same-location prediction shrinks toward the trend") {
  auto net = fixtures::y_network();
  std::vector<SitePoint> obs{fixtures::site_on(net, 1, 0.5, 1)};
  CovarianceParams p;
  p.sigma2 = 2.0;
  p.lambda = 8.0;
  p.tau2 = 2.0;
  p.beta = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd y(1);
  y << 4.0;
  std::vector<SitePoint> preds{fixtures::site_on(net, 1, 0.5, 10)};
  auto recs = run_predict(preds, obs, y, p, 1, net);
  // kriging weight sigma2/(sigma2+tau2) = 1/2
  CHECK(recs[0].mean == doctest::Approx(2.0));
  CHECK(recs[0].var == doctest::Approx(2.0 + 2.0 - 4.0 / 4.0));
}

TEST_CASE("prediction without usable neighbors falls back to the trend and marginal variance") {
  std::vector<Flowline> fls{
      {1, {{0, 1}, {0, 0}}, 5.0, 1.0},
      {2, {{10, 1}, {10, 0}}, 5.0, 1.0},
  };
  auto net = StreamNetwork::build(fls);
  std::vector<SitePoint> obs{fixtures::site_on(net, 1, 0.5, 1)};
  CovarianceParams p;
  p.sigma2 = 3.0;
  p.lambda = 4.0;
  p.tau2 = 1.0;
  p.beta = Eigen::VectorXd::Constant(1, 7.0);
  Eigen::VectorXd y(1);
  y << 100.0;
  std::vector<SitePoint> preds{fixtures::site_on(net, 2, 0.5, 10)};  // other component
  auto recs = run_predict(preds, obs, y, p, 1, net);
  CHECK(recs[0].no_neighbors);
  CHECK(recs[0].mean == doctest::Approx(7.0));
  CHECK(recs[0].var == doctest::Approx(4.0));
}

TEST_CASE("local kriging with all observations matches the dense oracle") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    SyntheticNetworkSpec spec;
    spec.n_reaches = 60 + 15 * trial;
    spec.seed = rng();
    auto net = StreamNetwork::build(generate_network(spec));
    auto obs = fixtures::random_sites(net, 25, rng);
    for (std::size_t i = 0; i < obs.size(); ++i) obs[i].site_id = static_cast<int>(i) + 1;
    auto preds = fixtures::random_sites(net, 12, rng);
    std::normal_distribution<double> nd;
    for (auto& s : preds) {
      s.site_id += 500;
      s.x = {1.0, nd(rng)};
    }
    auto p = fixtures::random_params(rng, 2);
    auto sim = simulate_ssn(net, obs, p, rng());

    auto recs = run_predict(preds, obs, sim.y, p, 25, net);
    auto oracle = oracle::dense_kriging(preds, obs, sim.y, p, net);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      CHECK(recs[i].mean == doctest::Approx(oracle.mean[static_cast<int>(i)]).epsilon(1e-8));
      CHECK(recs[i].var == doctest::Approx(oracle.var[static_cast<int>(i)]).epsilon(1e-8));
    }
  }
}

TEST_CASE("clamping and reach contributions") {
  auto net = fixtures::y_network();
  std::vector<PredictionRecord> recs(3);
  // densities per 100 m of 2, -0.5, 1 on reaches of length 200, 100, 50
  recs[0] = {1, 1, 2.0, 0.1, 2.0, 2.0 * 200.0 / 100.0, false};
  recs[1] = {2, 2, -0.5, 0.1, 0.0, 0.0, false};
  recs[2] = {3, 3, 1.0, 0.1, 1.0, 1.0 * 50.0 / 100.0, false};
  SUBCASE("predict fills clamped fields consistently") {
    std::vector<Flowline> fls{
        {1, {{0, 2}, {1, 1}}, 200.0, 2.0},
        {2, {{2, 2}, {1, 1}}, 100.0, 3.0},
        {3, {{1, 1}, {1, 0}}, 50.0, 1.0},
    };
    auto scaled = StreamNetwork::build(fls);
    std::vector<SitePoint> obs{fixtures::site_on(scaled, 1, 0.9, 1)};
    CovarianceParams p;
    p.sigma2 = 1.0;
    p.lambda = 1.0;
    p.tau2 = 0.0;
    p.beta = Eigen::VectorXd::Constant(1, -0.5);
    Eigen::VectorXd y(1);
    y << -0.5;
    auto out = run_predict(reach_midpoints(scaled), obs, y, p, 1, scaled);
    for (const auto& r : out) {
      CHECK(r.clamped_mean == std::max(r.mean, 0.0));
      const auto& reach = scaled.reach(scaled.index_of(r.reach_id));
      CHECK(r.reach_contribution == doctest::Approx(r.clamped_mean * reach.length / 100.0));
    }
  }
  SUBCASE("regional total sums clamped contributions") {
    auto sum = regional_total(recs, net);
    CHECK(sum.total == doctest::Approx(4.5));
    CHECK(sum.n_records == 3);
    CHECK(sum.negative_fraction == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("unknown reach id is an error") {
    recs[1].reach_id = 999;
    CHECK_THROWS_AS(regional_total(recs, net), ValidationError);
  }
}

TEST_CASE("negative variance beyond tolerance is an error") {
  // exercised through a deliberately inconsistent covariance is hard to build from
  // the public surface; instead confirm the clamp keeps tiny negatives at zero.
  auto net = fixtures::y_network();
  std::vector<SitePoint> obs{fixtures::site_on(net, 1, 0.5, 1)};
  CovarianceParams p;
  p.sigma2 = 1.0;
  p.lambda = 1e6;
  p.tau2 = 0.0;
  p.beta = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd y(1);
  y << 1.0;
  std::vector<SitePoint> preds{fixtures::site_on(net, 1, 0.5, 10)};
  auto recs = run_predict(preds, obs, y, p, 1, net);
  CHECK(recs[0].var >= 0.0);
}

TEST_CASE("predicted-observed diagnostics") {
  auto net = fixtures::y_network();
  std::vector<SitePoint> obs{fixtures::site_on(net, 1, 0.2, 1), fixtures::site_on(net, 2, 0.4, 2),
                             fixtures::site_on(net, 3, 0.6, 3), fixtures::site_on(net, 3, 0.9, 4)};
  obs[0].y = 1.0;
  obs[1].y = 2.0;
  obs[2].y = 3.0;
  obs[3].y = 4.0;

  SUBCASE("perfect linear agreement gives correlation 1") {
    std::vector<PredictionRecord> recs(4);
    for (int i = 0; i < 4; ++i) {
      recs[i].site_id = i + 1;
      recs[i].mean = 2.0 * (i + 1) + 3.0;
    }
    auto d = predicted_observed_diagnostics(recs, obs);
    CHECK(d.defined);
    CHECK(d.n == 4);
    CHECK(d.correlation == doctest::Approx(1.0));
    CHECK(d.pred_obs_ratio == doctest::Approx((5.0 + 7.0 + 9.0 + 11.0) / 10.0));
  }
  SUBCASE("fewer than three shared sites is undefined") {
    std::vector<PredictionRecord> recs(2);
    recs[0].site_id = 1;
    recs[1].site_id = 2;
    auto d = predicted_observed_diagnostics(recs, obs);
    CHECK_FALSE(d.defined);
  }
  SUBCASE("constant predictions have undefined correlation") {
    std::vector<PredictionRecord> recs(4);
    for (int i = 0; i < 4; ++i) {
      recs[i].site_id = i + 1;
      recs[i].mean = 5.0;
    }
    auto d = predicted_observed_diagnostics(recs, obs);
    CHECK_FALSE(d.defined);
  }
  SUBCASE("records at unobserved sites are ignored") {
    std::vector<PredictionRecord> recs(5);
    for (int i = 0; i < 4; ++i) {
      recs[i].site_id = i + 1;
      recs[i].mean = static_cast<double>(i + 1);
    }
    recs[4].site_id = 777;
    recs[4].mean = 1e9;
    auto d = predicted_observed_diagnostics(recs, obs);
    CHECK(d.defined);
    CHECK(d.n == 4);
    CHECK(d.correlation == doctest::Approx(1.0));
  }
}
