#include "s3n/simulate.hpp"

#include <cmath>
#include <iostream>
#include <random>

namespace s3n {

std::vector<Flowline> generate_network(const SyntheticNetworkSpec& spec) {
  if (spec.n_reaches < 1) throw ValidationError("generate_network: n_reaches must be >= 1");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> len_d(spec.length_dist.first, spec.length_dist.second);
  std::uniform_real_distribution<double> attr_d(spec.attribute_dist.first,
                                                spec.attribute_dist.second);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  struct Tip {
    Point at;
    int depth;
  };
  std::vector<Flowline> out;
  out.reserve(spec.n_reaches);
  int node_counter = 0;
  auto fresh_point = [&](int depth) {
    // integer-grid coordinates keep node keys collision-free at any precision
    return Point{static_cast<double>(++node_counter), static_cast<double>(depth)};
  };

  Point outlet_dn{0.0, 0.0};
  Point outlet_up = fresh_point(1);
  out.push_back({1, {outlet_up, outlet_dn}, len_d(rng), attr_d(rng)});
  std::vector<Tip> tips{{outlet_up, 1}};

  while (static_cast<int>(out.size()) < spec.n_reaches && !tips.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, tips.size() - 1);
    std::size_t t = pick(rng);
    Tip tip = tips[t];
    tips[t] = tips.back();
    tips.pop_back();
    int n_children = unif(rng) < spec.branching_prob ? 2 : 1;
    n_children = std::min<int>(n_children, spec.n_reaches - static_cast<int>(out.size()));
    for (int c = 0; c < n_children; ++c) {
      Point up = fresh_point(tip.depth + 1);
      out.push_back({static_cast<std::int64_t>(out.size()) + 1,
                     {up, tip.at},
                     len_d(rng),
                     attr_d(rng)});
      tips.push_back({up, tip.depth + 1});
    }
  }
  return out;
}

SimulatedData simulate_ssn(const StreamNetwork& net, std::vector<SitePoint>& obs,
                           const CovarianceParams& params, std::uint64_t seed) {
  const int n = static_cast<int>(obs.size());
  if (n > 20000) throw ValidationError("simulate_ssn: dense simulation capped at n = 20000");
  if (n > 5000)
    std::cerr << "simulate_ssn: dense factorization of " << n << " sites, expect high memory\n";

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);

  SimulatedData data;
  data.X.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    data.X(i, 0) = 1.0;
    data.X(i, 1) = nd(rng);
    obs[i].x = {1.0, data.X(i, 1)};
  }

  Eigen::VectorXd mean = data.X * params.beta;
  if (params.sigma2 == 0.0 && params.tau2 == 0.0) {
    data.y = mean;
  } else {
    Eigen::MatrixXd sigma = cov_block(obs, obs, params, net);
    Eigen::LLT<Eigen::MatrixXd> llt;
    cholesky_with_jitter(std::move(sigma), llt);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = nd(rng);
    data.y = mean + llt.matrixL() * z;
  }
  for (int i = 0; i < n; ++i) obs[i].y = data.y[i];
  return data;
}

namespace oracle {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

Eigen::LLT<Eigen::MatrixXd> factor_dense(const std::vector<SitePoint>& obs,
                                         const CovarianceParams& params,
                                         const StreamNetwork& net) {
  Eigen::MatrixXd sigma = cov_block(obs, obs, params, net);
  Eigen::LLT<Eigen::MatrixXd> llt;
  cholesky_with_jitter(std::move(sigma), llt);
  return llt;
}
}  // namespace

double dense_loglik(const std::vector<SitePoint>& obs, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, const CovarianceParams& params,
                    const StreamNetwork& net) {
  auto llt = factor_dense(obs, params, net);
  Eigen::VectorXd r = y - X * params.beta;
  Eigen::VectorXd alpha = llt.solve(r);
  double logdet = 0.0;
  for (int i = 0; i < r.size(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  return -0.5 * (r.size() * kLog2Pi + logdet + r.dot(alpha));
}

DenseGls dense_gls(const std::vector<SitePoint>& obs, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y, const CovarianceParams& params,
                   const StreamNetwork& net) {
  auto llt = factor_dense(obs, params, net);
  Eigen::MatrixXd si_x = llt.solve(X);
  Eigen::MatrixXd xtsx = X.transpose() * si_x;
  DenseGls out;
  Eigen::LLT<Eigen::MatrixXd> small(xtsx);
  out.beta = small.solve(si_x.transpose() * y);
  out.beta_cov = small.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  return out;
}

DenseKriging dense_kriging(const std::vector<SitePoint>& preds, const std::vector<SitePoint>& obs,
                           const Eigen::VectorXd& y, const CovarianceParams& params,
                           const StreamNetwork& net) {
  auto llt = factor_dense(obs, params, net);
  const int p = static_cast<int>(params.beta.size());
  Eigen::MatrixXd x1(obs.size(), p), x2(preds.size(), p);
  for (std::size_t i = 0; i < obs.size(); ++i)
    for (int j = 0; j < p; ++j) x1(i, j) = obs[i].x[j];
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (int j = 0; j < p; ++j) x2(i, j) = preds[i].x[j];

  Eigen::MatrixXd s21 = cov_block(preds, obs, params, net);
  Eigen::VectorXd alpha = llt.solve(y - x1 * params.beta);
  DenseKriging out;
  out.mean = x2 * params.beta + s21 * alpha;
  out.var.resize(preds.size());
  Eigen::MatrixXd si_s12 = llt.solve(s21.transpose());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double marginal =
        cov_pair(pair_geometry(preds[i], preds[i], net), params, true);
    out.var[i] = marginal - s21.row(i).dot(si_s12.col(i));
  }
  return out;
}

}  // namespace oracle

}  // namespace s3n
