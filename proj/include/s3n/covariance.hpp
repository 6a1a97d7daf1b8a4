#pragma once

#include <Eigen/Dense>

#include "s3n/distance.hpp"

namespace s3n {

struct FactorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// theta = (sigma2, lambda, tau2) plus fixed effects. lambda is the e-folding
// distance of the exponential decay, in the units of the stream distances.
struct CovarianceParams {
  double sigma2 = 1.0;  // tail-up partial sill
  double lambda = 1.0;  // range
  double tau2 = 0.0;    // nugget
  Eigen::VectorXd beta;

  void validate() const {
    if (!(sigma2 > 0.0)) throw ValidationError("sigma2 must be > 0");
    if (!(lambda > 0.0)) throw ValidationError("lambda must be > 0");
    if (!(tau2 >= 0.0)) throw ValidationError("tau2 must be >= 0");
  }
};

// Weighted exponential tail-up covariance between one site pair.
inline double cov_pair(const PairGeometry& g, const CovarianceParams& p, bool same_site) {
  double c = same_site ? p.tau2 : 0.0;
  if (g.flow_connected) c += g.weight * p.sigma2 * std::exp(-g.h / p.lambda);
  return c;
}

// Named kernels; only the weighted exponential tail-up ships, but likelihood code
// looks kernels up by name so additional components slot in without changes there.
using KernelFn = double (*)(const PairGeometry&, const CovarianceParams&, bool same_site);
KernelFn lookup_kernel(const std::string& name);
inline constexpr const char* kDefaultKernel = "exponential-tailup";

// Dense covariance block between two site sets; rows_i == cols_j is decided by
// site_id so a shared diagonal picks up the nugget.
Eigen::MatrixXd cov_block(const std::vector<SitePoint>& rows, const std::vector<SitePoint>& cols,
                          const CovarianceParams& params, const StreamNetwork& net);

// One-shot jitter for near-singular same-set blocks: 1e-10 x mean diagonal.
// Returns the jitter actually added (0 when the first factorization succeeds).
double cholesky_with_jitter(Eigen::MatrixXd sigma, Eigen::LLT<Eigen::MatrixXd>& llt);

}  // namespace s3n
