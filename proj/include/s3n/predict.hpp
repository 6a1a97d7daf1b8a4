#pragma once

#include "s3n/vecchia.hpp"

namespace s3n {

struct PredictionRecord {
  std::int64_t site_id = 0;
  std::int64_t reach_id = 0;
  double mean = 0.0;
  double var = 0.0;
  double clamped_mean = 0.0;           // max(mean, 0)
  double reach_contribution = 0.0;     // clamped_mean * length / per_100m_scale
  bool no_neighbors = false;           // fell back to the marginal predictive
};

// Local kriging: each prediction point conditions on its observation neighbors only.
std::vector<PredictionRecord> predict(const std::vector<SitePoint>& preds,
                                      const std::vector<SitePoint>& obs,
                                      const CovarianceParams& params,
                                      const std::vector<std::vector<NeighborEntry>>& pred_nbrs,
                                      const StreamNetwork& net,
                                      double per_100m_scale = 100.0);

struct RegionalSummary {
  double total = 0.0;                  // expected individuals over the region
  double negative_fraction = 0.0;      // share of records with mean < 0 before clamping
  int n_records = 0;
};
RegionalSummary regional_total(const std::vector<PredictionRecord>& records,
                               const StreamNetwork& net);

struct CorrelationSummary {
  double correlation = 0.0;
  bool defined = false;                // false when < 3 points or zero variance
  double pred_obs_ratio = 0.0;         // sum(predicted) / sum(observed)
  int n = 0;
};
// Pearson correlation between predicted and observed values at shared sites.
CorrelationSummary predicted_observed_diagnostics(const std::vector<PredictionRecord>& records,
                                                  const std::vector<SitePoint>& obs);

}  // namespace s3n
