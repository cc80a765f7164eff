#pragma once

#include <cstdint>
#include <deque>
#include <vector>

namespace wbseg {

/// s-t max-flow on a graph with implicit terminals, solved with the
/// Boykov-Kolmogorov augmenting-path algorithm (two search trees that are
/// reused between augmentations). Terminal links are set per node with
/// add_terminal_weights; n-links with add_edge.
class MaxFlowGraph {
 public:
  using NodeId = std::int32_t;

  explicit MaxFlowGraph(std::size_t node_hint = 0, std::size_t edge_hint = 0);

  NodeId add_node(std::size_t count = 1);
  std::size_t node_count() const { return nodes_.size(); }

  // Adds capacity from the source and to the sink (may be called repeatedly).
  void add_terminal_weights(NodeId i, double source_cap, double sink_cap);
  void add_edge(NodeId i, NodeId j, double cap, double rev_cap);

  double solve();
  double flow() const { return flow_; }

  // After solve(): true when the node is on the source side of the min cut
  // (reachable from the source in the residual graph).
  bool in_source_segment(NodeId i) const;

 private:
  static constexpr std::int32_t kNone = -1;
  static constexpr std::int32_t kTerminal = -2;
  static constexpr std::int32_t kOrphan = -3;

  struct Node {
    std::int32_t first = kNone;   // first outgoing arc
    std::int32_t parent = kNone;  // arc to parent, or kTerminal / kOrphan
    std::int64_t ts = 0;
    std::int32_t dist = 0;
    bool is_sink = false;
    bool active = false;
    double tr_cap = 0.0;  // >0: residual from source, <0: residual to sink
  };
  struct Arc {
    std::int32_t head = 0;
    std::int32_t next = kNone;
    double r_cap = 0.0;
  };

  static std::int32_t sister(std::int32_t a) { return a ^ 1; }

  void set_active(std::int32_t i);
  std::int32_t next_active();
  void augment(std::int32_t middle);
  void process_source_orphan(std::int32_t i);
  void process_sink_orphan(std::int32_t i);

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::deque<std::int32_t> active_;
  std::deque<std::int32_t> orphans_;
  std::int64_t time_ = 0;
  double flow_ = 0.0;
  bool solved_ = false;
};

/// Explicit network with source/sink vertices, for callers that build
/// ordinary directed graphs.
struct FlowNetwork {
  struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    double capacity = 0.0;
  };

  std::size_t node_count = 0;
  std::size_t source = 0;
  std::size_t sink = 1;
  std::vector<Edge> edges;
};

struct MaxFlowResult {
  double value = 0.0;
  std::vector<bool> source_side;  // per network vertex
};

MaxFlowResult max_flow(const FlowNetwork& net);

}  // namespace wbseg
