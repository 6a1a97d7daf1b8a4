#include "s3n/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace s3n {

namespace {

// coordinate rounded to `precision` decimals as an integer; llround maps -0.0001 to 0,
// so equal snapped points always quantize identically
long long quantize_coord(double v, int precision) {
  double scale = std::pow(10.0, precision);
  return std::llround(v * scale);
}

// writes q with `precision` decimals into buf (caller guarantees space), returns chars written
int format_quantized(char* buf, long long q, int precision) {
  char* p = buf;
  if (precision <= 0) return static_cast<int>(std::to_chars(p, p + 24, q).ptr - buf);
  unsigned long long mag = q < 0 ? -static_cast<unsigned long long>(q) : q;
  unsigned long long scale = 1;
  for (int i = 0; i < precision; ++i) scale *= 10;
  if (q < 0) *p++ = '-';
  p = std::to_chars(p, p + 24, mag / scale).ptr;
  *p++ = '.';
  unsigned long long frac = mag % scale;
  for (int i = precision - 1; i >= 0; --i) {
    p[i] = static_cast<char>('0' + frac % 10);
    frac /= 10;
  }
  return static_cast<int>(p + precision - buf);
}

}  // namespace

std::string node_key(const Point& p, int precision) {
  char buf[128];
  int off = format_quantized(buf, quantize_coord(p[0], precision), precision);
  buf[off++] = '_';
  off += format_quantized(buf + off, quantize_coord(p[1], precision), precision);
  return std::string(buf, off);
}

int StreamNetwork::index_of(std::int64_t reach_id) const {
  auto it = id_index_.find(reach_id);
  if (it == id_index_.end())
    throw ValidationError("unknown reach_id " + std::to_string(reach_id));
  return it->second;
}

int StreamNetwork::find(std::int64_t reach_id) const {
  auto it = id_index_.find(reach_id);
  return it == id_index_.end() ? -1 : it->second;
}

StreamNetwork StreamNetwork::build(std::vector<Flowline> flowlines, const NetworkConfig& config) {
  StreamNetwork net;
  net.config_ = config;
  net.reaches_.reserve(flowlines.size());

  std::unordered_set<std::int64_t> seen;
  seen.reserve(flowlines.size());
  for (auto& fl : flowlines) {
    if (fl.vertices.size() < 2)
      throw ValidationError("reach " + std::to_string(fl.reach_id) + ": fewer than 2 vertices");
    if (!(fl.length > 0.0))
      throw ValidationError("reach " + std::to_string(fl.reach_id) + ": nonpositive length");
    if (!(fl.additive_attr > 0.0))
      throw ValidationError("reach " + std::to_string(fl.reach_id) + ": nonpositive additive attribute");
    if (!seen.insert(fl.reach_id).second)
      throw ValidationError("duplicate reach_id " + std::to_string(fl.reach_id));
    Reach r;
    r.reach_id = fl.reach_id;
    r.vertices = std::move(fl.vertices);
    r.length = fl.length;
    r.additive_attr = fl.additive_attr;
    r.up_node = node_key(r.vertices.front(), config.precision);
    r.dn_node = node_key(r.vertices.back(), config.precision);
    net.reaches_.push_back(std::move(r));
  }
  if (net.reaches_.empty()) throw ValidationError("empty flowline set");

  net.build_adjacency();
  net.label_components();
  if (config.fix_complex_confluences) net.remove_smallest_branches();
  if (config.largest_component_only) net.restrict_to_largest_component();
  net.traverse_from_outlets();
  net.build_lift_table();
  return net;
}

void StreamNetwork::build_adjacency() {
  const int n = size();
  id_index_.clear();
  id_index_.reserve(n);
  for (int i = 0; i < n; ++i) id_index_[reaches_[i].reach_id] = i;

  // node interning on quantized endpoint coordinates (the string keys are derived
  // from the same quantization, so the two views always agree); sort-based rather
  // than hashed so large networks stay cache-friendly
  const int precision = config_.precision;
  struct Entry {
    long long x, y;
    int slot;  // 2*reach for the upstream end, 2*reach+1 for the downstream end
  };
  std::vector<Entry> entries(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Point& up = reaches_[i].vertices.front();
    const Point& dn = reaches_[i].vertices.back();
    entries[2 * i] = {quantize_coord(up[0], precision), quantize_coord(up[1], precision), 2 * i};
    entries[2 * i + 1] = {quantize_coord(dn[0], precision), quantize_coord(dn[1], precision),
                          2 * i + 1};
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.slot < b.slot;
  });
  up_node_idx_.assign(n, -1);
  dn_node_idx_.assign(n, -1);
  int n_nodes = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k > 0 && (entries[k].x != entries[k - 1].x || entries[k].y != entries[k - 1].y)) ++n_nodes;
    int slot = entries[k].slot;
    (slot & 1 ? dn_node_idx_ : up_node_idx_)[slot >> 1] = n_nodes;
  }
  if (!entries.empty()) ++n_nodes;
  nodes_.assign(n_nodes, Node{});

  for (int i = 0; i < n; ++i) {
    int u = up_node_idx_[i];
    if (nodes_[u].out_reach != -1) {
      throw TopologyError("braided channel: reaches " +
                          std::to_string(reaches_[nodes_[u].out_reach].reach_id) + " and " +
                          std::to_string(reaches_[i].reach_id) +
                          " both start at node " + reaches_[i].up_node);
    }
    nodes_[u].out_reach = i;
  }

  std::vector<int> indeg(n_nodes, 0);
  for (int i = 0; i < n; ++i) ++indeg[dn_node_idx_[i]];
  for (int v = 0; v < n_nodes; ++v) nodes_[v].in_reaches.reserve(indeg[v]);
  for (int i = 0; i < n; ++i) nodes_[dn_node_idx_[i]].in_reaches.push_back(i);

  for (int i = 0; i < n; ++i) {
    Reach& r = reaches_[i];
    r.parent = nodes_[dn_node_idx_[i]].out_reach;  // downstream continuation, -1 at an outlet node
    if (r.parent == i) throw TopologyError("reach " + std::to_string(r.reach_id) + " is its own parent");
    r.children = nodes_[up_node_idx_[i]].in_reaches;  // ascending fill order keeps them sorted
    r.is_source = r.children.empty();
    r.is_outlet = (r.parent == -1);
  }

  // directed cycle check: every reach must reach an outlet by parent-following
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = reaches_[i].parent;
  std::vector<int> state(n, 0);
  for (int i = 0; i < n; ++i) {
    if (state[i]) continue;
    std::vector<int> path;
    int cur = i;
    while (cur != -1 && state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = parent[cur];
    }
    if (cur != -1 && state[cur] == 1)
      throw TopologyError("directed cycle through reach " + std::to_string(reaches_[cur].reach_id));
    for (int idx : path) state[idx] = 2;
  }
}

void StreamNetwork::label_components() {
  const int n = size();
  // union-find over endpoint nodes: reaches sharing a node share a component;
  // components are numbered in order of first appearance by reach index
  std::vector<int> uf(nodes_.size());
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (int i = 0; i < n; ++i) {
    int a = find(up_node_idx_[i]);
    int b = find(dn_node_idx_[i]);
    if (a != b) uf[a] = b;
  }
  std::vector<int> label(nodes_.size(), -1);
  int comp = 0;
  for (int i = 0; i < n; ++i) {
    int root = find(dn_node_idx_[i]);
    if (label[root] == -1) label[root] = comp++;
    reaches_[i].component = label[root];
  }
  n_components_ = comp;
}

namespace {
// subtree additive-attribute totals by upstream BFS accumulation
std::vector<double> subtree_totals(const std::vector<StreamNetwork::Reach>& reaches) {
  const int n = static_cast<int>(reaches.size());
  std::vector<double> total(n);
  std::vector<double> acc(n, 0.0);
  std::vector<int> pending(n, 0);
  std::vector<int> parent(n);
  std::vector<double> attr(n);
  for (int i = 0; i < n; ++i) {
    pending[i] = static_cast<int>(reaches[i].children.size());
    parent[i] = reaches[i].parent;
    attr[i] = reaches[i].additive_attr;
  }
  std::vector<int> ready;
  for (int i = 0; i < n; ++i)
    if (pending[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    int cur = ready.back();
    ready.pop_back();
    total[cur] = attr[cur] + acc[cur];
    int p = parent[cur];
    if (p != -1) {
      acc[p] += total[cur];
      if (--pending[p] == 0) ready.push_back(p);
    }
  }
  return total;
}
}  // namespace

std::vector<StreamNetwork::ComplexConfluence> StreamNetwork::complex_confluences() const {
  auto totals = subtree_totals(reaches_);
  std::vector<ComplexConfluence> out;
  for (int i = 0; i < size(); ++i) {
    if (reaches_[i].children.size() <= 2) continue;
    ComplexConfluence cc;
    cc.reach = i;
    cc.children = reaches_[i].children;
    std::sort(cc.children.begin(), cc.children.end(), [&](int a, int b) {
      if (totals[a] != totals[b]) return totals[a] < totals[b];
      return reaches_[a].reach_id < reaches_[b].reach_id;
    });
    out.push_back(std::move(cc));
  }
  return out;
}

void StreamNetwork::remove_smallest_branches() {
  const int n_before = size();
  bool changed = true;
  while (changed) {
    changed = false;
    auto totals = subtree_totals(reaches_);
    for (int i = 0; i < size(); ++i) {
      if (reaches_[i].children.size() <= 2) continue;
      // pick the child with the smallest subtree attribute, ties to smaller reach_id
      int victim = -1;
      for (int c : reaches_[i].children) {
        if (victim == -1 || totals[c] < totals[victim] ||
            (totals[c] == totals[victim] && reaches_[c].reach_id < reaches_[victim].reach_id))
          victim = c;
      }
      // drop victim and its whole upstream subtree
      std::vector<bool> keep(size(), true);
      std::vector<int> stack{victim};
      int dropped = 0;
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        keep[cur] = false;
        ++dropped;
        for (int c : reaches_[cur].children) stack.push_back(c);
      }
      cleaning_log_.push_back("complex confluence at reach " +
                              std::to_string(reaches_[i].reach_id) + ": removed branch of " +
                              std::to_string(dropped) + " reaches rooted at reach " +
                              std::to_string(reaches_[victim].reach_id));
      reindex(keep);
      changed = true;
      break;
    }
  }
  retained_fraction_ = static_cast<double>(size()) / n_before * retained_fraction_;
}

void StreamNetwork::restrict_to_largest_component() {
  std::vector<int> count(n_components_, 0);
  for (const auto& r : reaches_) ++count[r.component];
  int best = 0;
  for (int c = 1; c < n_components_; ++c)
    if (count[c] > count[best]) best = c;  // ties keep the smaller component id
  if (count[best] == size()) return;
  std::vector<bool> keep(size());
  for (int i = 0; i < size(); ++i) keep[i] = reaches_[i].component == best;
  const int n_before = size();
  reindex(keep);
  cleaning_log_.push_back("restricted to largest component: kept " + std::to_string(size()) +
                          " of " + std::to_string(n_before) + " reaches");
  retained_fraction_ = static_cast<double>(size()) / n_before * retained_fraction_;
}

void StreamNetwork::reindex(const std::vector<bool>& keep) {
  std::vector<Reach> kept;
  kept.reserve(reaches_.size());
  for (std::size_t i = 0; i < reaches_.size(); ++i)
    if (keep[i]) kept.push_back(std::move(reaches_[i]));
  reaches_ = std::move(kept);
  build_adjacency();
  label_components();
}

void StreamNetwork::traverse_from_outlets() {
  const int n = size();
  auto totals = subtree_totals(reaches_);
  for (int i = 0; i < n; ++i) reaches_[i].subtree_attr = totals[i];

  int clock = 0;
  std::vector<std::pair<int, bool>> stack;  // (reach, children pushed)
  for (int i = 0; i < n; ++i) {
    if (!reaches_[i].is_outlet) continue;
    reaches_[i].updist_dn = 0.0;
    reaches_[i].afv = 1.0;
    reaches_[i].depth = 0;
    stack.emplace_back(i, false);
    while (!stack.empty()) {
      auto& [cur, expanded] = stack.back();
      if (expanded) {
        reaches_[cur].euler_out = clock++;
        stack.pop_back();
        continue;
      }
      expanded = true;
      Reach& r = reaches_[cur];
      r.euler_in = clock++;
      double sib_sum = 0.0;
      for (int c : r.children) sib_sum += reaches_[c].additive_attr;
      for (int c : r.children) {
        Reach& ch = reaches_[c];
        ch.updist_dn = r.updist_dn + r.length;
        ch.afv = r.afv * (ch.additive_attr / sib_sum);
        ch.depth = r.depth + 1;
        stack.emplace_back(c, false);
      }
    }
  }
}

void StreamNetwork::build_lift_table() {
  const int n = size();
  int max_depth = 0;
  for (const auto& r : reaches_) max_depth = std::max(max_depth, r.depth);
  int levels = 1;
  while ((1 << levels) <= max_depth) ++levels;
  lift_.assign(levels, std::vector<int>(n, -1));
  for (int i = 0; i < n; ++i) lift_[0][i] = reaches_[i].parent;
  for (int k = 1; k < levels; ++k)
    for (int i = 0; i < n; ++i) {
      int mid = lift_[k - 1][i];
      lift_[k][i] = mid == -1 ? -1 : lift_[k - 1][mid];
    }
}

int StreamNetwork::lca(int a, int b) const {
  if (reaches_[a].component != reaches_[b].component) return -1;
  if (upstream_or_equal(a, b)) return b;
  if (upstream_or_equal(b, a)) return a;
  // lift a until its parent is a (non-strict) ancestor of b
  int cur = a;
  for (int k = static_cast<int>(lift_.size()) - 1; k >= 0; --k) {
    int up = lift_[k][cur];
    if (up != -1 && !upstream_or_equal(b, up)) cur = up;
  }
  return reaches_[cur].parent;
}

}  // namespace s3n
