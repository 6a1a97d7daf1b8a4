#include "s3n/sites.hpp"

#include <algorithm>
#include <cmath>

namespace s3n {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double v) { return v * v; }

// squared distance from p to segment [a,b]; t_out is the clamped parameter along the segment
double point_segment_dist2(const Point& p, const Point& a, const Point& b, double& t_out) {
  double dx = b[0] - a[0], dy = b[1] - a[1];
  double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  t_out = t;
  return sq(p[0] - (a[0] + t * dx)) + sq(p[1] - (a[1] + t * dy));
}

void finalize(SitePoint& s, const StreamNetwork& net) {
  const auto& r = net.reach(s.reach);
  s.updist = r.updist_dn + s.ratio * r.length;
  s.afv = r.afv;
}

// stream distance between the midpoints of two reaches, +inf across components
double midpoint_stream_dist(int a, int b, const StreamNetwork& net) {
  if (a == b) return 0.0;
  const auto& ra = net.reach(a);
  const auto& rb = net.reach(b);
  if (ra.component != rb.component) return kInf;
  double ua = ra.updist_dn + 0.5 * ra.length;
  double ub = rb.updist_dn + 0.5 * rb.length;
  if (net.upstream_or_equal(a, b) || net.upstream_or_equal(b, a)) return std::abs(ua - ub);
  int j = net.lca(a, b);
  const auto& rj = net.reach(j);
  double uj = rj.updist_dn + rj.length;  // junction node at the upstream end of the lca reach
  return ua + ub - 2.0 * uj;
}

}  // namespace

SitePoint place_site(const SiteInput& input, const StreamNetwork& net, const SnapConfig& cfg) {
  SitePoint s;
  s.site_id = input.site_id;
  s.x = input.x;
  s.y = input.y;

  if (input.reach_id) {
    s.reach = net.index_of(*input.reach_id);
    s.ratio = input.ratio.value_or(0.5);
    if (s.ratio < 0.0 || s.ratio > 1.0)
      throw ValidationError("site " + std::to_string(s.site_id) + ": ratio outside [0,1]");
    s.snap_dist = 0.0;
    finalize(s, net);
    return s;
  }
  if (!input.coords)
    throw ValidationError("site " + std::to_string(s.site_id) + ": no coordinates or reach placement");

  const Point& p = *input.coords;
  double best_d2 = kInf;
  int best_reach = -1;
  double best_ratio = 0.0;
  for (int i = 0; i < net.size(); ++i) {
    const auto& verts = net.reach(i).vertices;
    double geom_len = 0.0;
    for (std::size_t k = 1; k < verts.size(); ++k)
      geom_len += std::hypot(verts[k][0] - verts[k - 1][0], verts[k][1] - verts[k - 1][1]);
    double arc = 0.0;
    for (std::size_t k = 1; k < verts.size(); ++k) {
      double t;
      double d2 = point_segment_dist2(p, verts[k - 1], verts[k], t);
      double seg = std::hypot(verts[k][0] - verts[k - 1][0], verts[k][1] - verts[k - 1][1]);
      if (d2 < best_d2 ||
          (d2 == best_d2 && best_reach != -1 &&
           net.reach(i).reach_id < net.reach(best_reach).reach_id)) {
        best_d2 = d2;
        best_reach = i;
        // arc length from the upstream end; ratio is measured from the downstream node
        double from_up = arc + t * seg;
        best_ratio = geom_len > 0.0 ? 1.0 - from_up / geom_len : 0.5;
      }
      arc += seg;
    }
  }
  double dist = std::sqrt(best_d2);
  if (dist > cfg.max_snap_dist)
    throw ValidationError("site " + std::to_string(s.site_id) + ": nearest reach is " +
                          std::to_string(dist) + " m away, above the snap threshold");
  s.reach = best_reach;
  s.ratio = std::clamp(best_ratio, 0.0, 1.0);
  s.snap_dist = dist;
  finalize(s, net);
  return s;
}

std::vector<SitePoint> snap_sites(const std::vector<SiteInput>& inputs, const StreamNetwork& net,
                                  const SnapConfig& cfg) {
  std::vector<SitePoint> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(place_site(in, net, cfg));
  return out;
}

std::vector<SitePoint> reach_midpoints(const StreamNetwork& net,
                                       const std::vector<std::int64_t>& excluded_reach_ids) {
  std::vector<SitePoint> out;
  out.reserve(net.size());
  for (int i = 0; i < net.size(); ++i) {
    const auto& r = net.reach(i);
    if (std::find(excluded_reach_ids.begin(), excluded_reach_ids.end(), r.reach_id) !=
        excluded_reach_ids.end())
      continue;
    SitePoint s;
    s.site_id = r.reach_id;  // stable: midpoint ids mirror reach ids
    s.reach = i;
    s.ratio = 0.5;
    s.x = {1.0};
    finalize(s, net);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> impute_nearest_reach(const std::vector<std::optional<double>>& values,
                                         const StreamNetwork& net) {
  if (static_cast<int>(values.size()) != net.size())
    throw ValidationError("impute_nearest_reach: value count does not match reach count");
  std::vector<double> out(values.size());
  std::vector<int> donors;
  for (int i = 0; i < net.size(); ++i)
    if (values[i]) {
      out[i] = *values[i];
      donors.push_back(i);
    }
  for (int i = 0; i < net.size(); ++i) {
    if (values[i]) continue;
    double best = kInf;
    int best_donor = -1;
    for (int d : donors) {
      if (net.reach(d).component != net.reach(i).component) continue;
      double dist = midpoint_stream_dist(i, d, net);
      if (dist < best ||
          (dist == best && best_donor != -1 &&
           net.reach(d).reach_id < net.reach(best_donor).reach_id)) {
        best = dist;
        best_donor = d;
      }
    }
    if (best_donor == -1)
      throw ValidationError("impute_nearest_reach: component of reach " +
                            std::to_string(net.reach(i).reach_id) + " has no non-missing value");
    out[i] = out[best_donor];
  }
  return out;
}

}  // namespace s3n
