#pragma once

#include <cstdint>
#include <vector>

#include "s3n/sites.hpp"

namespace s3n {

struct PairGeometry {
  bool flow_connected = false;
  double h = 0.0;           // |updist difference| for flow-connected pairs
  double total_dist = 0.0;  // hydrologic distance through the common junction, +inf across components
  double weight = 0.0;      // sqrt(afv_upstream / afv_downstream), 0 when flow-unconnected
};

PairGeometry pair_geometry(const SitePoint& a, const SitePoint& b, const StreamNetwork& net);

enum class OrderScheme { UpdistDescending, Input, Random };
OrderScheme parse_order_scheme(const std::string& name);
std::string order_scheme_name(OrderScheme s);

// Permutation of indices into `obs`. Default puts headwaters first so downstream
// points condition on upstream neighbors.
std::vector<int> order_sites(const std::vector<SitePoint>& obs, OrderScheme scheme,
                             std::uint64_t seed = 0);

enum class NNMetric { Total, FlowConnectedOnly };
NNMetric parse_nn_metric(const std::string& name);
std::string nn_metric_name(NNMetric m);

struct NeighborEntry {
  int site = -1;  // index into the observation list (original order, not permuted)
  PairGeometry geom;
};

struct NeighborGraph {
  std::vector<int> order;                           // permutation of obs indices
  int m = 0;
  NNMetric metric = NNMetric::Total;
  std::vector<std::vector<NeighborEntry>> neighbors;  // neighbors[k]: prior sites of order[k]
};

NeighborGraph build_neighbor_graph(const std::vector<SitePoint>& obs,
                                   const std::vector<int>& order, int m,
                                   const StreamNetwork& net,
                                   NNMetric metric = NNMetric::Total);

// For every prediction point, its m nearest observation sites; batches are a pure
// partition of the work and do not change results.
std::vector<std::vector<NeighborEntry>> predict_neighbors(const std::vector<SitePoint>& preds,
                                                          const std::vector<SitePoint>& obs,
                                                          int m, const StreamNetwork& net,
                                                          int batch_size = 5000,
                                                          NNMetric metric = NNMetric::Total);

}  // namespace s3n
