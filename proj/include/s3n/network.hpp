#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace s3n {

using Point = std::array<double, 2>;

// Raw input segment. First vertex is the upstream end, last the downstream end.
struct Flowline {
  std::int64_t reach_id = 0;
  std::vector<Point> vertices;
  double length = 0.0;          // meters (authoritative, may differ from polyline length)
  double additive_attr = 0.0;   // e.g. watershed area, must be > 0
};

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Canonical node identifier from rounded endpoint coordinates.
std::string node_key(const Point& p, int precision);

struct NetworkConfig {
  int precision = 3;                     // decimals kept when forming node keys
  bool fix_complex_confluences = false;  // drop smallest branches until confluences are binary
  bool largest_component_only = false;
};

class StreamNetwork {
 public:
  struct Reach {
    std::int64_t reach_id = 0;
    std::vector<Point> vertices;
    double length = 0.0;
    double additive_attr = 0.0;
    std::string up_node, dn_node;
    std::vector<int> children;       // directly upstream reaches (indices)
    int parent = -1;                 // directly downstream reach, -1 at outlet
    int component = -1;
    bool is_source = false;
    bool is_outlet = false;
    double updist_dn = 0.0;          // upstream distance of the downstream node
    double afv = 1.0;                // additive function value, in (0, 1]
    double subtree_attr = 0.0;       // sum of additive_attr over this reach's subtree
    int euler_in = 0, euler_out = 0; // interval labels: a upstream of b <=> [in_a,out_a] within [in_b,out_b]
    int depth = 0;                   // hops to the outlet reach
  };

  static StreamNetwork build(std::vector<Flowline> flowlines, const NetworkConfig& config = {});

  const std::vector<Reach>& reaches() const { return reaches_; }
  const Reach& reach(int idx) const { return reaches_[idx]; }
  int size() const { return static_cast<int>(reaches_.size()); }
  int n_components() const { return n_components_; }
  const NetworkConfig& config() const { return config_; }
  int index_of(std::int64_t reach_id) const;
  int find(std::int64_t reach_id) const;  // -1 when absent

  // true when `a` is `b` or lies strictly upstream of `b` (O(1) interval test)
  bool upstream_or_equal(int a, int b) const {
    const Reach& ra = reaches_[a];
    const Reach& rb = reaches_[b];
    return rb.euler_in <= ra.euler_in && ra.euler_out <= rb.euler_out;
  }
  // deepest common downstream reach, -1 across components
  int lca(int a, int b) const;

  // reach-edge view of the node graph, used by distance search
  struct Node {
    std::vector<int> in_reaches;  // reaches whose downstream node is this node
    int out_reach = -1;           // reach whose upstream node is this node
  };
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int idx) const { return nodes_[idx]; }
  int up_node_index(int reach) const { return up_node_idx_[reach]; }
  int dn_node_index(int reach) const { return dn_node_idx_[reach]; }

  // reaches with more than two direct upstream branches, children sorted by subtree attribute
  struct ComplexConfluence {
    int reach = -1;
    std::vector<int> children;  // ascending subtree additive attribute, ties by reach_id
  };
  std::vector<ComplexConfluence> complex_confluences() const;

  const std::vector<std::string>& cleaning_log() const { return cleaning_log_; }
  double retained_fraction() const { return retained_fraction_; }

 private:
  StreamNetwork() = default;
  void build_adjacency();
  void label_components();
  void remove_smallest_branches();
  void restrict_to_largest_component();
  void traverse_from_outlets();  // updist, afv, euler labels, depth, subtree attr
  void build_lift_table();
  void reindex(const std::vector<bool>& keep);

  std::vector<Reach> reaches_;
  std::vector<Node> nodes_;
  std::vector<int> up_node_idx_, dn_node_idx_;
  std::unordered_map<std::int64_t, int> id_index_;
  std::vector<std::vector<int>> lift_;  // lift_[k][i] = 2^k-th downstream ancestor
  int n_components_ = 0;
  NetworkConfig config_;
  std::vector<std::string> cleaning_log_;
  double retained_fraction_ = 1.0;
};

}  // namespace s3n
