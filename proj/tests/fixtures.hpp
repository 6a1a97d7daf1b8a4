#pragma once

// Shared test fixtures: the 3-reach Y-network and small random instances.

#include <random>

#include "s3n/distance.hpp"
#include "s3n/simulate.hpp"

namespace fixtures {

// Y-network: A (0,2)->(1,1) attr 2 len 5, B (2,2)->(1,1) attr 3 len 5,
// O (1,1)->(1,0) len 10. Confluence at (1,1), outlet at (1,0).
inline std::vector<s3n::Flowline> y_flowlines() {
  return {
      {1, {{0, 2}, {1, 1}}, 5.0, 2.0},   // A
      {2, {{2, 2}, {1, 1}}, 5.0, 3.0},   // B
      {3, {{1, 1}, {1, 0}}, 10.0, 1.0},  // O
  };
}

inline s3n::StreamNetwork y_network() { return s3n::StreamNetwork::build(y_flowlines()); }

inline s3n::SitePoint site_on(const s3n::StreamNetwork& net, std::int64_t reach_id, double ratio,
                              std::int64_t site_id) {
  s3n::SiteInput in;
  in.site_id = site_id;
  in.reach_id = reach_id;
  in.ratio = ratio;
  in.x = {1.0};
  return s3n::place_site(in, net);
}

// random sites at distinct positions on a network
inline std::vector<s3n::SitePoint> random_sites(const s3n::StreamNetwork& net, int n,
                                                std::mt19937_64& rng) {
  std::uniform_int_distribution<int> reach_d(0, net.size() - 1);
  std::uniform_real_distribution<double> ratio_d(0.0, 1.0);
  std::vector<s3n::SitePoint> out;
  for (int i = 0; i < n; ++i)
    out.push_back(site_on(net, net.reach(reach_d(rng)).reach_id, ratio_d(rng), i + 1));
  return out;
}

inline s3n::CovarianceParams random_params(std::mt19937_64& rng, int p = 1) {
  std::uniform_real_distribution<double> u(0.2, 3.0);
  s3n::CovarianceParams params;
  params.sigma2 = u(rng);
  params.lambda = 100.0 * u(rng);
  params.tau2 = u(rng);
  params.beta = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < p; ++j) params.beta[j] = u(rng) - 1.5;
  return params;
}

}  // namespace fixtures
