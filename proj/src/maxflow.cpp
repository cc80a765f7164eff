#include "wbseg/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wbseg/error.hpp"

namespace wbseg {

MaxFlowGraph::MaxFlowGraph(std::size_t node_hint, std::size_t edge_hint) {
  nodes_.reserve(node_hint);
  arcs_.reserve(2 * edge_hint);
}

MaxFlowGraph::NodeId MaxFlowGraph::add_node(std::size_t count) {
  const auto first = static_cast<NodeId>(nodes_.size());
  nodes_.resize(nodes_.size() + count);
  return first;
}

void MaxFlowGraph::add_terminal_weights(NodeId i, double source_cap, double sink_cap) {
  if (!(source_cap >= 0.0) || !(sink_cap >= 0.0) || !std::isfinite(source_cap) ||
      !std::isfinite(sink_cap)) {
    throw Error(ErrorCode::InvalidArgument, "terminal capacities must be finite and >= 0");
  }
  Node& n = nodes_[static_cast<std::size_t>(i)];
  const double delta = n.tr_cap;
  if (delta > 0) source_cap += delta;
  else sink_cap -= delta;
  flow_ += std::min(source_cap, sink_cap);
  n.tr_cap = source_cap - sink_cap;
}

void MaxFlowGraph::add_edge(NodeId i, NodeId j, double cap, double rev_cap) {
  if (!(cap >= 0.0) || !(rev_cap >= 0.0) || !std::isfinite(cap) || !std::isfinite(rev_cap)) {
    throw Error(ErrorCode::InvalidArgument, "edge capacities must be finite and >= 0");
  }
  if (i == j) return;
  const auto a = static_cast<std::int32_t>(arcs_.size());
  arcs_.push_back({j, nodes_[static_cast<std::size_t>(i)].first, cap});
  arcs_.push_back({i, nodes_[static_cast<std::size_t>(j)].first, rev_cap});
  nodes_[static_cast<std::size_t>(i)].first = a;
  nodes_[static_cast<std::size_t>(j)].first = a + 1;
}

void MaxFlowGraph::set_active(std::int32_t i) {
  Node& n = nodes_[static_cast<std::size_t>(i)];
  if (!n.active) {
    n.active = true;
    active_.push_back(i);
  }
}

std::int32_t MaxFlowGraph::next_active() {
  while (!active_.empty()) {
    const std::int32_t i = active_.front();
    active_.pop_front();
    Node& n = nodes_[static_cast<std::size_t>(i)];
    n.active = false;
    if (n.parent != kNone) return i;
  }
  return kNone;
}

void MaxFlowGraph::augment(std::int32_t middle) {
  // `middle` runs from a source-tree node to a sink-tree node.
  double bottleneck = arcs_[static_cast<std::size_t>(middle)].r_cap;
  std::int32_t i = arcs_[static_cast<std::size_t>(sister(middle))].head;
  for (;;) {
    const std::int32_t a = nodes_[static_cast<std::size_t>(i)].parent;
    if (a == kTerminal) break;
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(sister(a))].r_cap);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, nodes_[static_cast<std::size_t>(i)].tr_cap);

  i = arcs_[static_cast<std::size_t>(middle)].head;
  for (;;) {
    const std::int32_t a = nodes_[static_cast<std::size_t>(i)].parent;
    if (a == kTerminal) break;
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(a)].r_cap);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, -nodes_[static_cast<std::size_t>(i)].tr_cap);

  arcs_[static_cast<std::size_t>(sister(middle))].r_cap += bottleneck;
  arcs_[static_cast<std::size_t>(middle)].r_cap -= bottleneck;

  i = arcs_[static_cast<std::size_t>(sister(middle))].head;
  for (;;) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    const std::int32_t a = n.parent;
    if (a == kTerminal) break;
    arcs_[static_cast<std::size_t>(a)].r_cap += bottleneck;
    arcs_[static_cast<std::size_t>(sister(a))].r_cap -= bottleneck;
    if (arcs_[static_cast<std::size_t>(sister(a))].r_cap <= 0.0) {
      arcs_[static_cast<std::size_t>(sister(a))].r_cap = 0.0;
      n.parent = kOrphan;
      orphans_.push_front(i);
    }
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    n.tr_cap -= bottleneck;
    if (n.tr_cap <= 0.0) {
      n.tr_cap = 0.0;
      n.parent = kOrphan;
      orphans_.push_front(i);
    }
  }

  i = arcs_[static_cast<std::size_t>(middle)].head;
  for (;;) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    const std::int32_t a = n.parent;
    if (a == kTerminal) break;
    arcs_[static_cast<std::size_t>(sister(a))].r_cap += bottleneck;
    arcs_[static_cast<std::size_t>(a)].r_cap -= bottleneck;
    if (arcs_[static_cast<std::size_t>(a)].r_cap <= 0.0) {
      arcs_[static_cast<std::size_t>(a)].r_cap = 0.0;
      n.parent = kOrphan;
      orphans_.push_front(i);
    }
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    n.tr_cap += bottleneck;
    if (n.tr_cap >= 0.0) {
      n.tr_cap = 0.0;
      n.parent = kOrphan;
      orphans_.push_front(i);
    }
  }
  flow_ += bottleneck;
}

void MaxFlowGraph::process_source_orphan(std::int32_t i) {
  constexpr std::int32_t kInf = std::numeric_limits<std::int32_t>::max();
  std::int32_t best_arc = kNone;
  std::int32_t best_dist = kInf;

  for (std::int32_t a0 = nodes_[static_cast<std::size_t>(i)].first; a0 != kNone;
       a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    if (arcs_[static_cast<std::size_t>(sister(a0))].r_cap <= 0.0) continue;
    std::int32_t j = arcs_[static_cast<std::size_t>(a0)].head;
    const Node& nj = nodes_[static_cast<std::size_t>(j)];
    if (nj.is_sink || nj.parent == kNone) continue;

    // Distance to the source, or kInf if j hangs off an orphan.
    std::int32_t d = 0;
    for (;;) {
      Node& nn = nodes_[static_cast<std::size_t>(j)];
      if (nn.ts == time_) {
        d += nn.dist;
        break;
      }
      const std::int32_t a = nn.parent;
      ++d;
      if (a == kTerminal) {
        nn.ts = time_;
        nn.dist = 1;
        break;
      }
      if (a == kOrphan) {
        d = kInf;
        break;
      }
      j = arcs_[static_cast<std::size_t>(a)].head;
    }
    if (d < kInf) {
      if (d < best_dist) {
        best_arc = a0;
        best_dist = d;
      }
      for (j = arcs_[static_cast<std::size_t>(a0)].head;
           nodes_[static_cast<std::size_t>(j)].ts != time_;
           j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
        nodes_[static_cast<std::size_t>(j)].ts = time_;
        nodes_[static_cast<std::size_t>(j)].dist = d--;
      }
    }
  }

  Node& ni = nodes_[static_cast<std::size_t>(i)];
  if (best_arc != kNone) {
    ni.parent = best_arc;
    ni.ts = time_;
    ni.dist = best_dist + 1;
    return;
  }
  ni.parent = kNone;
  for (std::int32_t a0 = ni.first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    const std::int32_t j = arcs_[static_cast<std::size_t>(a0)].head;
    Node& nj = nodes_[static_cast<std::size_t>(j)];
    if (nj.is_sink || nj.parent == kNone) continue;
    if (arcs_[static_cast<std::size_t>(sister(a0))].r_cap > 0.0) set_active(j);
    if (nj.parent != kTerminal && nj.parent != kOrphan &&
        arcs_[static_cast<std::size_t>(nj.parent)].head == i) {
      nj.parent = kOrphan;
      orphans_.push_back(j);
    }
  }
}

void MaxFlowGraph::process_sink_orphan(std::int32_t i) {
  constexpr std::int32_t kInf = std::numeric_limits<std::int32_t>::max();
  std::int32_t best_arc = kNone;
  std::int32_t best_dist = kInf;

  for (std::int32_t a0 = nodes_[static_cast<std::size_t>(i)].first; a0 != kNone;
       a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    if (arcs_[static_cast<std::size_t>(a0)].r_cap <= 0.0) continue;
    std::int32_t j = arcs_[static_cast<std::size_t>(a0)].head;
    const Node& nj = nodes_[static_cast<std::size_t>(j)];
    if (!nj.is_sink || nj.parent == kNone) continue;

    std::int32_t d = 0;
    for (;;) {
      Node& nn = nodes_[static_cast<std::size_t>(j)];
      if (nn.ts == time_) {
        d += nn.dist;
        break;
      }
      const std::int32_t a = nn.parent;
      ++d;
      if (a == kTerminal) {
        nn.ts = time_;
        nn.dist = 1;
        break;
      }
      if (a == kOrphan) {
        d = kInf;
        break;
      }
      j = arcs_[static_cast<std::size_t>(a)].head;
    }
    if (d < kInf) {
      if (d < best_dist) {
        best_arc = a0;
        best_dist = d;
      }
      for (j = arcs_[static_cast<std::size_t>(a0)].head;
           nodes_[static_cast<std::size_t>(j)].ts != time_;
           j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
        nodes_[static_cast<std::size_t>(j)].ts = time_;
        nodes_[static_cast<std::size_t>(j)].dist = d--;
      }
    }
  }

  Node& ni = nodes_[static_cast<std::size_t>(i)];
  if (best_arc != kNone) {
    ni.parent = best_arc;
    ni.ts = time_;
    ni.dist = best_dist + 1;
    return;
  }
  ni.parent = kNone;
  for (std::int32_t a0 = ni.first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    const std::int32_t j = arcs_[static_cast<std::size_t>(a0)].head;
    Node& nj = nodes_[static_cast<std::size_t>(j)];
    if (!nj.is_sink || nj.parent == kNone) continue;
    if (arcs_[static_cast<std::size_t>(a0)].r_cap > 0.0) set_active(j);
    if (nj.parent != kTerminal && nj.parent != kOrphan &&
        arcs_[static_cast<std::size_t>(nj.parent)].head == i) {
      nj.parent = kOrphan;
      orphans_.push_back(j);
    }
  }
}

double MaxFlowGraph::solve() {
  if (solved_) return flow_;
  solved_ = true;

  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    Node& n = nodes_[idx];
    const auto i = static_cast<std::int32_t>(idx);
    if (n.tr_cap > 0) {
      n.is_sink = false;
      n.parent = kTerminal;
      set_active(i);
      n.ts = 0;
      n.dist = 1;
    } else if (n.tr_cap < 0) {
      n.is_sink = true;
      n.parent = kTerminal;
      set_active(i);
      n.ts = 0;
      n.dist = 1;
    } else {
      n.parent = kNone;
    }
  }

  std::int32_t current = kNone;
  for (;;) {
    std::int32_t i = current;
    if (i != kNone) {
      // The node may have become free while processing orphans.
      if (nodes_[static_cast<std::size_t>(i)].parent == kNone) i = kNone;
    }
    if (i == kNone) {
      i = next_active();
      if (i == kNone) break;
    }

    std::int32_t middle = kNone;
    const Node& ni = nodes_[static_cast<std::size_t>(i)];
    if (!ni.is_sink) {
      for (std::int32_t a = ni.first; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
        if (arcs_[static_cast<std::size_t>(a)].r_cap <= 0.0) continue;
        const std::int32_t j = arcs_[static_cast<std::size_t>(a)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (nj.parent == kNone) {
          nj.is_sink = false;
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
          set_active(j);
        } else if (nj.is_sink) {
          middle = a;
          break;
        } else if (nj.ts <= ni.ts && nj.dist > ni.dist) {
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
        }
      }
    } else {
      for (std::int32_t a = ni.first; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
        if (arcs_[static_cast<std::size_t>(sister(a))].r_cap <= 0.0) continue;
        const std::int32_t j = arcs_[static_cast<std::size_t>(a)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (nj.parent == kNone) {
          nj.is_sink = true;
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
          set_active(j);
        } else if (!nj.is_sink) {
          middle = sister(a);
          break;
        } else if (nj.ts <= ni.ts && nj.dist > ni.dist) {
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
        }
      }
    }

    ++time_;
    if (middle != kNone) {
      current = i;
      augment(middle);
      while (!orphans_.empty()) {
        const std::int32_t o = orphans_.front();
        orphans_.pop_front();
        if (nodes_[static_cast<std::size_t>(o)].is_sink) process_sink_orphan(o);
        else process_source_orphan(o);
      }
    } else {
      current = kNone;
    }
  }
  return flow_;
}

bool MaxFlowGraph::in_source_segment(NodeId i) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  return n.parent != kNone && !n.is_sink;
}

MaxFlowResult max_flow(const FlowNetwork& net) {
  if (net.source >= net.node_count || net.sink >= net.node_count || net.source == net.sink) {
    throw Error(ErrorCode::InvalidArgument, "flow network needs distinct in-range terminals");
  }
  // Interior vertices map to graph nodes; terminal arcs become t-links.
  std::vector<MaxFlowGraph::NodeId> id(net.node_count, -1);
  MaxFlowGraph g(net.node_count, net.edges.size());
  for (std::size_t v = 0; v < net.node_count; ++v) {
    if (v != net.source && v != net.sink) id[v] = g.add_node();
  }
  double direct = 0.0;
  for (const auto& e : net.edges) {
    if (!(e.capacity >= 0.0) || !std::isfinite(e.capacity)) {
      throw Error(ErrorCode::InvalidArgument, "capacities must be finite and >= 0");
    }
    if (e.from >= net.node_count || e.to >= net.node_count) {
      throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    }
    if (e.from == e.to || e.to == net.source || e.from == net.sink) continue;
    if (e.from == net.source && e.to == net.sink) {
      direct += e.capacity;
    } else if (e.from == net.source) {
      g.add_terminal_weights(id[e.to], e.capacity, 0.0);
    } else if (e.to == net.sink) {
      g.add_terminal_weights(id[e.from], 0.0, e.capacity);
    } else {
      g.add_edge(id[e.from], id[e.to], e.capacity, 0.0);
    }
  }
  MaxFlowResult result;
  result.value = g.solve() + direct;
  result.source_side.assign(net.node_count, false);
  result.source_side[net.source] = true;
  for (std::size_t v = 0; v < net.node_count; ++v) {
    if (id[v] >= 0) result.source_side[v] = g.in_source_segment(id[v]);
  }
  return result;
}

}  // namespace wbseg
