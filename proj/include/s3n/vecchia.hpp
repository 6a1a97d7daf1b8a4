#pragma once

#include <map>
#include <optional>

#include "s3n/covariance.hpp"

namespace s3n {

// Sparse factor of the nearest-neighbor covariance: per-site coefficients over the
// neighbor set and conditional variances, in ordered (permutation) space.
struct VecchiaFactor {
  std::vector<int> order;                 // order[k] = original obs index
  std::vector<std::vector<int>> nbr;      // per position k: neighbor obs indices
  std::vector<Eigen::VectorXd> a;
  Eigen::VectorXd d;

  int n() const { return static_cast<int>(order.size()); }
  // w = D^{-1/2}(I - A) v, ordered output; v indexed like the original obs list
  Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;
  // solve D^{-1/2}(I - A) v = w for v (forward substitution), inverse of whiten
  Eigen::VectorXd unwhiten(const Eigen::VectorXd& w) const;
};

// Pairwise geometry for one observation set and neighbor graph, precomputed once so
// the optimizer can rebuild factors at new parameter values cheaply.
class VecchiaContext {
 public:
  VecchiaContext(const NeighborGraph& graph, const std::vector<SitePoint>& obs,
                 const StreamNetwork& net);

  VecchiaFactor factor(const CovarianceParams& params) const;
  int n() const { return static_cast<int>(rows_.size()); }
  // median finite nonzero neighbor-pair distance; default range initializer
  double median_neighbor_dist() const;
  const std::vector<int>& order() const { return order_; }

 private:
  struct Row {
    std::vector<int> nbr;
    std::vector<double> cross_h, cross_w;    // geometry of (site, neighbor) pairs
    std::vector<double> within_h, within_w;  // upper triangle (j < k) of neighbor pairs
    std::int64_t site_id = 0;
  };
  std::vector<Row> rows_;
  std::vector<int> order_;
  double median_dist_ = 0.0;
};

double loglik(const VecchiaFactor& factor, const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& beta);

struct ProfileBeta {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;  // (X' Sigma^-1 X)^-1
  double loglik = 0.0;       // at the GLS beta
};
ProfileBeta profile_beta(const VecchiaFactor& factor, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& X);

struct OptimizerConfig {
  int max_iter = 500;
  double tol = 1e-8;        // relative loglik change
  double init_step = 0.5;   // simplex spread in log-parameter space
};

enum class BootstrapMode { Resample, Normal };

struct FitResult {
  CovarianceParams params;
  Eigen::MatrixXd beta_cov;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  int n_evals = 0;
  struct Interval { double lo = 0.0, hi = 0.0; };
  std::optional<Interval> ci_sigma2, ci_lambda, ci_tau2;
  int bootstrap_reps = 0;
  int bootstrap_dropped = 0;
  std::map<std::string, double> timings;  // seconds per stage
};

FitResult fit(const VecchiaContext& ctx, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              std::optional<CovarianceParams> init = std::nullopt,
              const OptimizerConfig& config = {});

void bootstrap_ci(FitResult& result, const VecchiaContext& ctx, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, int B, std::uint64_t seed,
                  BootstrapMode mode = BootstrapMode::Resample,
                  const OptimizerConfig& config = {});

}  // namespace s3n
