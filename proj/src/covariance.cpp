#include "s3n/covariance.hpp"

namespace s3n {

KernelFn lookup_kernel(const std::string& name) {
  if (name == kDefaultKernel)
    return +[](const PairGeometry& g, const CovarianceParams& p, bool same) {
      return cov_pair(g, p, same);
    };
  throw ValidationError("unknown kernel: " + name);
}

Eigen::MatrixXd cov_block(const std::vector<SitePoint>& rows, const std::vector<SitePoint>& cols,
                          const CovarianceParams& params, const StreamNetwork& net) {
  params.validate();
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      bool same = rows[i].site_id == cols[j].site_id;
      out(i, j) = cov_pair(pair_geometry(rows[i], cols[j], net), params, same);
    }
  return out;
}

double cholesky_with_jitter(Eigen::MatrixXd sigma, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(sigma);
  if (llt.info() == Eigen::Success) return 0.0;
  double jitter = 1e-10 * sigma.diagonal().mean();
  sigma.diagonal().array() += jitter;
  llt.compute(sigma);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("covariance block not positive definite after jitter");
  return jitter;
}

}  // namespace s3n
