#pragma once

#include "s3n/covariance.hpp"

namespace s3n {

struct SyntheticNetworkSpec {
  int n_reaches = 100;
  double branching_prob = 0.3;
  std::pair<double, double> length_dist = {50.0, 250.0};
  std::pair<double, double> attribute_dist = {1.0, 10.0};
  std::uint64_t seed = 0;
};

// Grows a rooted tree from a single outlet by repeated tip extension/bifurcation.
// Coordinates are synthetic but consistent with the topology, so the result always
// builds cleanly as a StreamNetwork.
std::vector<Flowline> generate_network(const SyntheticNetworkSpec& spec);

// Exact dense draw from the full (non-approximated) model: y = X beta + chol(Sigma) z.
// X gets an intercept column and one iid standard-normal covariate, written back
// into the sites' covariate rows.
struct SimulatedData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};
SimulatedData simulate_ssn(const StreamNetwork& net, std::vector<SitePoint>& obs,
                           const CovarianceParams& params, std::uint64_t seed);

// Dense reference implementations used only as test oracles. They build the full
// covariance and never touch the sparse factor code path.
namespace oracle {

double dense_loglik(const std::vector<SitePoint>& obs, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, const CovarianceParams& params,
                    const StreamNetwork& net);

struct DenseGls {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;
};
DenseGls dense_gls(const std::vector<SitePoint>& obs, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y, const CovarianceParams& params,
                   const StreamNetwork& net);

struct DenseKriging {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};
DenseKriging dense_kriging(const std::vector<SitePoint>& preds, const std::vector<SitePoint>& obs,
                           const Eigen::VectorXd& y, const CovarianceParams& params,
                           const StreamNetwork& net);

}  // namespace oracle

}  // namespace s3n
