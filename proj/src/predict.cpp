#include "s3n/predict.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace s3n {

std::vector<PredictionRecord> predict(const std::vector<SitePoint>& preds,
                                      const std::vector<SitePoint>& obs,
                                      const CovarianceParams& params,
                                      const std::vector<std::vector<NeighborEntry>>& pred_nbrs,
                                      const StreamNetwork& net, double per_100m_scale) {
  params.validate();
  if (pred_nbrs.size() != preds.size())
    throw ValidationError("predict: neighbor lists do not match prediction points");
  const double marginal = params.sigma2 + params.tau2;

  std::vector<PredictionRecord> out(preds.size());
  Eigen::MatrixXd block;
  Eigen::VectorXd cross, resid;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    const auto& site = preds[p];
    const auto& nbrs = pred_nbrs[p];
    PredictionRecord rec;
    rec.site_id = site.site_id;
    rec.reach_id = net.reach(site.reach).reach_id;
    Eigen::Map<const Eigen::VectorXd> xr(site.x.data(), site.x.size());
    double trend = xr.dot(params.beta);

    if (nbrs.empty()) {
      rec.mean = trend;
      rec.var = marginal;
      rec.no_neighbors = true;
    } else {
      const int k = static_cast<int>(nbrs.size());
      block.resize(k, k);
      cross.resize(k);
      resid.resize(k);
      for (int i = 0; i < k; ++i) {
        const auto& oi = obs[nbrs[i].site];
        cross[i] = cov_pair(nbrs[i].geom, params, site.site_id == oi.site_id);
        Eigen::Map<const Eigen::VectorXd> xi(oi.x.data(), oi.x.size());
        resid[i] = oi.y.value() - xi.dot(params.beta);
        for (int j = i; j < k; ++j) {
          const auto& oj = obs[nbrs[j].site];
          double c = i == j ? marginal : cov_pair(pair_geometry(oi, oj, net), params, false);
          block(i, j) = c;
          block(j, i) = c;
        }
      }
      Eigen::LLT<Eigen::MatrixXd> llt;
      cholesky_with_jitter(block, llt);
      Eigen::VectorXd alpha = llt.solve(cross);
      rec.mean = trend + alpha.dot(resid);
      rec.var = marginal - alpha.dot(cross);
      if (rec.var < 0.0) {
        if (rec.var < -1e-10) throw ValidationError("predict: negative predictive variance");
        rec.var = 0.0;
      }
    }
    rec.clamped_mean = std::max(rec.mean, 0.0);
    rec.reach_contribution = rec.clamped_mean * net.reach(site.reach).length / per_100m_scale;
    out[p] = std::move(rec);
  }
  return out;
}

RegionalSummary regional_total(const std::vector<PredictionRecord>& records,
                               const StreamNetwork& net) {
  RegionalSummary s;
  s.n_records = static_cast<int>(records.size());
  int negatives = 0;
  for (const auto& rec : records) {
    if (net.find(rec.reach_id) < 0)
      throw ValidationError("regional_total: record for unknown reach " +
                            std::to_string(rec.reach_id));
    s.total += rec.reach_contribution;
    if (rec.mean < 0.0) ++negatives;
  }
  if (!records.empty()) s.negative_fraction = static_cast<double>(negatives) / records.size();
  return s;
}

CorrelationSummary predicted_observed_diagnostics(const std::vector<PredictionRecord>& records,
                                                  const std::vector<SitePoint>& obs) {
  std::unordered_map<std::int64_t, double> pred_by_site;
  for (const auto& r : records) pred_by_site[r.site_id] = r.mean;

  std::vector<double> p, o;
  for (const auto& s : obs) {
    auto it = pred_by_site.find(s.site_id);
    if (it == pred_by_site.end() || !s.y) continue;
    p.push_back(it->second);
    o.push_back(*s.y);
  }
  CorrelationSummary out;
  out.n = static_cast<int>(p.size());
  double so = 0.0, sp = 0.0;
  for (int i = 0; i < out.n; ++i) {
    so += o[i];
    sp += p[i];
  }
  out.pred_obs_ratio = so != 0.0 ? sp / so : 0.0;
  if (out.n < 3) return out;  // undefined, not an error
  double mo = so / out.n, mp = sp / out.n;
  double vo = 0.0, vp = 0.0, cov = 0.0;
  for (int i = 0; i < out.n; ++i) {
    vo += (o[i] - mo) * (o[i] - mo);
    vp += (p[i] - mp) * (p[i] - mp);
    cov += (o[i] - mo) * (p[i] - mp);
  }
  if (vo <= 0.0 || vp <= 0.0) return out;  // constant series, undefined
  out.correlation = cov / std::sqrt(vo * vp);
  out.defined = true;
  return out;
}

}  // namespace s3n
