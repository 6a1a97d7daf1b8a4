#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "s3n/network.hpp"

namespace s3n {

struct SitePoint {
  std::int64_t site_id = 0;
  int reach = -1;               // index into StreamNetwork::reaches()
  double ratio = 0.0;           // fraction of reach length measured from the downstream node
  double updist = 0.0;          // = updist_dn(reach) + ratio * length(reach)
  double afv = 1.0;             // host reach afv
  double snap_dist = 0.0;       // Euclidean distance moved during snapping (0 when placed directly)
  std::vector<double> x;        // covariate row, x[0] = 1 intercept
  std::optional<double> y;      // observed density, absent at prediction points
};

// Input record: either raw coordinates or an explicit (reach_id, ratio) placement.
struct SiteInput {
  std::int64_t site_id = 0;
  std::optional<Point> coords;
  std::optional<std::int64_t> reach_id;
  std::optional<double> ratio;
  std::vector<double> x;
  std::optional<double> y;
};

struct SnapConfig {
  double max_snap_dist = 500.0;  // meters
};

SitePoint place_site(const SiteInput& input, const StreamNetwork& net, const SnapConfig& cfg = {});
std::vector<SitePoint> snap_sites(const std::vector<SiteInput>& inputs, const StreamNetwork& net,
                                  const SnapConfig& cfg = {});

// One prediction point at the midpoint of every reach not listed in `excluded_reach_ids`.
// Covariates default to intercept-only; callers attach real covariates afterwards.
std::vector<SitePoint> reach_midpoints(const StreamNetwork& net,
                                       const std::vector<std::int64_t>& excluded_reach_ids = {});

// Fill missing per-reach values from the nearest (stream distance between reach
// midpoints) reach with a value; ties broken by smaller reach_id.
std::vector<double> impute_nearest_reach(const std::vector<std::optional<double>>& values,
                                         const StreamNetwork& net);

}  // namespace s3n
