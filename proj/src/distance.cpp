#include "s3n/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <unordered_map>

namespace s3n {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PairGeometry pair_geometry(const SitePoint& a, const SitePoint& b, const StreamNetwork& net) {
  PairGeometry g;
  const auto& ra = net.reach(a.reach);
  const auto& rb = net.reach(b.reach);
  if (ra.component != rb.component) {
    g.flow_connected = false;
    g.h = g.total_dist = kInf;
    g.weight = 0.0;
    return g;
  }
  bool a_up = net.upstream_or_equal(a.reach, b.reach);
  bool b_up = net.upstream_or_equal(b.reach, a.reach);
  if (a_up || b_up) {
    // same reach, or one reach strictly upstream of the other: every site pair is
    // on a single flow path
    g.flow_connected = true;
    g.h = g.total_dist = std::abs(a.updist - b.updist);
    const SitePoint& up = a.updist >= b.updist ? a : b;
    const SitePoint& dn = a.updist >= b.updist ? b : a;
    g.weight = std::sqrt(up.afv / dn.afv);
    return g;
  }
  int j = net.lca(a.reach, b.reach);
  const auto& rj = net.reach(j);
  double junction_updist = rj.updist_dn + rj.length;  // upstream node of the lca reach
  g.flow_connected = false;
  g.total_dist = a.updist + b.updist - 2.0 * junction_updist;
  g.h = g.total_dist;
  g.weight = 0.0;
  return g;
}

OrderScheme parse_order_scheme(const std::string& name) {
  if (name == "updist" || name == "updist-desc") return OrderScheme::UpdistDescending;
  if (name == "input") return OrderScheme::Input;
  if (name == "random") return OrderScheme::Random;
  throw ValidationError("unknown order scheme: " + name);
}

std::string order_scheme_name(OrderScheme s) {
  switch (s) {
    case OrderScheme::UpdistDescending: return "updist";
    case OrderScheme::Input: return "input";
    case OrderScheme::Random: return "random";
  }
  return "?";
}

NNMetric parse_nn_metric(const std::string& name) {
  if (name == "total") return NNMetric::Total;
  if (name == "flow-connected-only") return NNMetric::FlowConnectedOnly;
  throw ValidationError("unknown nn metric: " + name);
}

std::string nn_metric_name(NNMetric m) {
  return m == NNMetric::Total ? "total" : "flow-connected-only";
}

std::vector<int> order_sites(const std::vector<SitePoint>& obs, OrderScheme scheme,
                             std::uint64_t seed) {
  std::vector<int> order(obs.size());
  std::iota(order.begin(), order.end(), 0);
  switch (scheme) {
    case OrderScheme::Input:
      break;
    case OrderScheme::UpdistDescending:
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (obs[a].updist != obs[b].updist) return obs[a].updist > obs[b].updist;
        return obs[a].site_id < obs[b].site_id;
      });
      break;
    case OrderScheme::Random: {
      std::mt19937_64 rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      break;
    }
  }
  return order;
}

namespace {

// Nearest-neighbor search by expanding outward over the node graph from the query
// site, instead of scanning all candidate pairs. Settled node distances are exact,
// so the search can stop once the frontier passes the current m-th best candidate.
class StreamSearcher {
 public:
  StreamSearcher(const std::vector<SitePoint>& sites, const StreamNetwork& net)
      : sites_(sites), net_(net), node_dist_(net.n_nodes(), kInf),
        reach_sites_(net.size()) {
    for (int i = 0; i < static_cast<int>(sites.size()); ++i)
      reach_sites_[sites[i].reach].push_back(i);
  }

  // `allowed` filters candidate sites; `want` is the number of neighbors requested.
  template <typename Allowed>
  std::vector<std::pair<double, int>> nearest(const SitePoint& q, int want, Allowed allowed) {
    std::vector<std::pair<double, int>> cands;  // (dist, site index), deduped at the end
    if (want <= 0) return cands;

    // kept_ holds the `want` smallest per-site best distances so the k-th statistic
    // used for termination is O(1); offers only ever lower a site's distance, so the
    // bounded set stays exact under replacement
    auto offer = [&](int site, double dist) {
      auto [it, inserted] = best_.try_emplace(site, dist);
      if (!inserted) {
        if (dist >= it->second) return;
        auto ke = kept_.find(it->second);
        if (ke != kept_.end()) kept_.erase(ke);
        it->second = dist;
      }
      if (static_cast<int>(kept_.size()) < want) {
        kept_.insert(dist);
      } else if (dist < *kept_.rbegin()) {
        kept_.erase(std::prev(kept_.end()));
        kept_.insert(dist);
      }
    };
    // sites sharing the query's host reach
    const auto& host = net_.reach(q.reach);
    for (int t : reach_sites_[q.reach])
      if (allowed(t)) offer(t, std::abs(sites_[t].ratio - q.ratio) * host.length);

    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    auto push_node = [&](int node, double d) {
      if (d < node_dist_[node]) {
        node_dist_[node] = d;
        touched_.push_back(node);
        pq.emplace(d, node);
      }
    };
    push_node(net_.dn_node_index(q.reach), q.ratio * host.length);
    push_node(net_.up_node_index(q.reach), (1.0 - q.ratio) * host.length);

    auto worst_kept = [&]() {
      return static_cast<int>(kept_.size()) < want ? kInf : *kept_.rbegin();
    };

    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > node_dist_[v]) continue;
      if (static_cast<int>(best_.size()) >= want && d > worst_kept()) break;
      auto relax_reach = [&](int e) {
        const auto& re = net_.reach(e);
        int un = net_.up_node_index(e), dn = net_.dn_node_index(e);
        double du = v == un ? d : d + re.length;
        double dd = v == dn ? d : d + re.length;
        push_node(un, du);
        push_node(dn, dd);
        if (e != q.reach)
          for (int t : reach_sites_[e])
            if (allowed(t))
              offer(t, std::min(dd + sites_[t].ratio * re.length,
                                du + (1.0 - sites_[t].ratio) * re.length));
      };
      const auto& node = net_.node(v);
      if (node.out_reach != -1) relax_reach(node.out_reach);
      for (int e : node.in_reaches) relax_reach(e);
    }

    for (const auto& [s, d] : best_) cands.emplace_back(d, s);
    std::sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return sites_[a.second].site_id < sites_[b.second].site_id;
    });
    if (static_cast<int>(cands.size()) > want) cands.resize(want);

    for (int v : touched_) node_dist_[v] = kInf;
    touched_.clear();
    best_.clear();
    kept_.clear();
    return cands;
  }

  // flow-connected candidates only, ranked by flow distance h
  template <typename Allowed>
  std::vector<std::pair<double, int>> nearest_flow_connected(const SitePoint& q, int want,
                                                             Allowed allowed) {
    std::vector<std::pair<double, int>> cands;
    // downstream chain (includes the host reach)
    for (int r = q.reach; r != -1; r = net_.reach(r).parent)
      for (int t : reach_sites_[r])
        if (allowed(t)) cands.emplace_back(std::abs(sites_[t].updist - q.updist), t);
    // strictly upstream subtree via euler intervals
    ensure_euler_index();
    const auto& host = net_.reach(q.reach);
    auto lo = std::lower_bound(euler_sites_.begin(), euler_sites_.end(),
                               std::make_pair(host.euler_in, -1));
    for (auto it = lo; it != euler_sites_.end() && it->first <= host.euler_out; ++it) {
      int t = it->second;
      if (sites_[t].reach == q.reach) continue;  // already counted on the chain
      if (allowed(t)) cands.emplace_back(std::abs(sites_[t].updist - q.updist), t);
    }
    std::sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return sites_[a.second].site_id < sites_[b.second].site_id;
    });
    if (static_cast<int>(cands.size()) > want) cands.resize(want);
    return cands;
  }

 private:
  void ensure_euler_index() {
    if (!euler_sites_.empty() || sites_.empty()) return;
    euler_sites_.reserve(sites_.size());
    for (int i = 0; i < static_cast<int>(sites_.size()); ++i)
      euler_sites_.emplace_back(net_.reach(sites_[i].reach).euler_in, i);
    std::sort(euler_sites_.begin(), euler_sites_.end());
  }

  const std::vector<SitePoint>& sites_;
  const StreamNetwork& net_;
  std::vector<double> node_dist_;
  std::vector<int> touched_;
  std::unordered_map<int, double> best_;
  std::multiset<double> kept_;
  std::vector<std::vector<int>> reach_sites_;
  std::vector<std::pair<int, int>> euler_sites_;
};

}  // namespace

NeighborGraph build_neighbor_graph(const std::vector<SitePoint>& obs,
                                   const std::vector<int>& order, int m,
                                   const StreamNetwork& net, NNMetric metric) {
  if (m < 1) throw ValidationError("neighbor cap m must be >= 1");
  NeighborGraph g;
  g.order = order;
  g.m = m;
  g.metric = metric;
  g.neighbors.resize(order.size());

  std::vector<int> pos(obs.size(), -1);
  for (int k = 0; k < static_cast<int>(order.size()); ++k) pos[order[k]] = k;

  StreamSearcher searcher(obs, net);
  for (int k = 0; k < static_cast<int>(order.size()); ++k) {
    int i = order[k];
    int want = std::min(k, m);
    auto allowed = [&](int t) { return pos[t] < k; };
    auto cands = metric == NNMetric::Total
                     ? searcher.nearest(obs[i], want, allowed)
                     : searcher.nearest_flow_connected(obs[i], want, allowed);
    auto& lst = g.neighbors[k];
    lst.reserve(cands.size());
    for (const auto& [d, t] : cands)
      lst.push_back({t, pair_geometry(obs[i], obs[t], net)});
  }
  return g;
}

std::vector<std::vector<NeighborEntry>> predict_neighbors(const std::vector<SitePoint>& preds,
                                                          const std::vector<SitePoint>& obs,
                                                          int m, const StreamNetwork& net,
                                                          int batch_size, NNMetric metric) {
  if (m < 1) throw ValidationError("neighbor cap m must be >= 1");
  if (obs.empty()) throw ValidationError("predict_neighbors: no observation sites");
  if (batch_size < 1) batch_size = static_cast<int>(preds.size());

  std::vector<std::vector<NeighborEntry>> out(preds.size());
  StreamSearcher searcher(obs, net);
  auto allowed = [](int) { return true; };
  const int n = static_cast<int>(preds.size());
  for (int start = 0; start < n; start += batch_size) {
    int end = std::min(n, start + batch_size);
    for (int p = start; p < end; ++p) {
      auto cands = metric == NNMetric::Total
                       ? searcher.nearest(preds[p], m, allowed)
                       : searcher.nearest_flow_connected(preds[p], m, allowed);
      out[p].reserve(cands.size());
      for (const auto& [d, t] : cands)
        out[p].push_back({t, pair_geometry(preds[p], obs[t], net)});
    }
  }
  return out;
}

}  // namespace s3n
