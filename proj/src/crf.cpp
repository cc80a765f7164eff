#include "wbseg/crf.hpp"

#include <cmath>
#include <limits>

#include "wbseg/error.hpp"
#include "wbseg/maxflow.hpp"
#include "wbseg/parallel.hpp"

namespace wbseg {

void CrfParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "crf lambda must be finite and >= 0");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw Error(ErrorCode::InvalidArgument, "crf sigma2 must be finite and > 0");
  }
  if (connectivity != 6 && connectivity != 26) {
    throw Error(ErrorCode::InvalidArgument, "crf connectivity must be 6 or 26");
  }
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "crf epsilon must lie in (0, 1)");
  }
}

void CrfProblem::validate() const {
  if (num_labels < 2) throw Error(ErrorCode::InvalidArgument, "crf needs at least two labels");
  if (unary.size() != nodes * num_labels) {
    throw Error(ErrorCode::InvalidArgument, "unary table size mismatch");
  }
  for (double u : unary) {
    if (!std::isfinite(u)) throw Error(ErrorCode::NonFiniteValue, "non-finite unary");
  }
  for (const auto& e : edges) {
    if (e.a >= nodes || e.b >= nodes || e.a == e.b) {
      throw Error(ErrorCode::InvalidArgument, "bad crf edge endpoints");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::InvalidArgument, "crf edge weight must be finite and >= 0");
    }
  }
}

std::array<double, kNumClasses> unary_from_posterior(const ClassPosterior& p, double epsilon) {
  std::array<double, kNumClasses> u{};
  for (std::size_t c = 0; c < kNumClasses; ++c) u[c] = -std::log(std::max(p[c], epsilon));
  return u;
}

double pairwise_weight(std::span<const float> fv, std::span<const float> fr, const CrfParams& params) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < fv.size(); ++i) {
    const double d = static_cast<double>(fv[i]) - static_cast<double>(fr[i]);
    d2 += d * d;
  }
  return params.lambda * std::exp(-std::sqrt(d2) / params.sigma2);
}

namespace {

struct Offset {
  int di, dj, dk;
};

// Half of the neighbourhood: offsets that are lexicographically positive in
// (dk, dj, di), so every undirected pair is produced once.
std::vector<Offset> forward_offsets(int connectivity) {
  std::vector<Offset> out;
  for (int dk = -1; dk <= 1; ++dk) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const int manhattan = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (manhattan == 0) continue;
        if (connectivity == 6 && manhattan != 1) continue;
        const bool positive = dk > 0 || (dk == 0 && (dj > 0 || (dj == 0 && di > 0)));
        if (positive) out.push_back({di, dj, dk});
      }
    }
  }
  return out;
}

}  // namespace

CrfProblem build_crf_problem(const VoxelFeatures& vf, const Dims& dims,
                             std::span<const ClassPosterior> posteriors, const CrfParams& params) {
  params.validate();
  const std::size_t n = vf.features.rows();
  if (posteriors.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "one posterior per in-mask voxel required");
  }
  if (vf.row_of_voxel.size() != dims.voxels()) {
    throw Error(ErrorCode::DimsMismatch, "feature index does not match volume dims");
  }
  CrfProblem problem;
  problem.num_labels = kNumClasses;
  problem.nodes = n;
  problem.unary.resize(n * kNumClasses);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const auto u = unary_from_posterior(posteriors[r], params.epsilon);
      std::copy(u.begin(), u.end(), problem.unary.begin() + static_cast<std::ptrdiff_t>(r * kNumClasses));
    }
  });

  const auto offsets = forward_offsets(params.connectivity);
  // Per-chunk edge lists, concatenated in row order for determinism.
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(worker_count() * 4, n / 4096 + 1));
  std::vector<std::vector<CrfEdge>> parts(chunks);
  const std::size_t per = (n + chunks - 1) / chunks;
  parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t c = cb; c < ce; ++c) {
      auto& out = parts[c];
      const std::size_t lo = c * per;
      const std::size_t hi = std::min(n, lo + per);
      for (std::size_t r = lo; r < hi; ++r) {
        const VoxelIndex v = dims.unravel(vf.voxel_of_row[r]);
        for (const auto& o : offsets) {
          const auto ni = static_cast<std::ptrdiff_t>(v.i) + o.di;
          const auto nj = static_cast<std::ptrdiff_t>(v.j) + o.dj;
          const auto nk = static_cast<std::ptrdiff_t>(v.k) + o.dk;
          if (ni < 0 || nj < 0 || nk < 0) continue;
          const VoxelIndex u{static_cast<std::size_t>(ni), static_cast<std::size_t>(nj),
                             static_cast<std::size_t>(nk)};
          if (!dims.contains(u)) continue;
          const std::int32_t q = vf.row_of_voxel[dims.linear(u)];
          if (q < 0) continue;
          out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(q),
                         pairwise_weight(vf.features.row(r), vf.features.row(static_cast<std::size_t>(q)),
                                         params)});
        }
      }
    }
  }, 1);
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  problem.edges.reserve(total);
  for (auto& p : parts) problem.edges.insert(problem.edges.end(), p.begin(), p.end());
  return problem;
}

double energy(const CrfProblem& problem, std::span<const std::uint8_t> labels) {
  if (labels.size() != problem.nodes) {
    throw Error(ErrorCode::InvalidArgument, "labeling must cover every node");
  }
  double e = 0.0;
  for (std::size_t v = 0; v < problem.nodes; ++v) {
    if (labels[v] >= problem.num_labels) throw Error(ErrorCode::InvalidArgument, "label out of range");
    e += problem.cost(v, labels[v]);
  }
  for (const auto& edge : problem.edges) {
    if (labels[edge.a] != labels[edge.b]) e += edge.weight;
  }
  return e;
}

std::vector<std::uint8_t> unary_argmin(const CrfProblem& problem) {
  std::vector<std::uint8_t> out(problem.nodes, 0);
  for (std::size_t v = 0; v < problem.nodes; ++v) {
    std::size_t best = 0;
    for (std::size_t l = 1; l < problem.num_labels; ++l) {
      if (problem.cost(v, l) < problem.cost(v, best)) best = l;
    }
    out[v] = static_cast<std::uint8_t>(best);
  }
  return out;
}

namespace {

// Binary move: x_v = 1 (sink side) switches v to alpha, x_v = 0 keeps it.
std::vector<std::uint8_t> expansion_move(const CrfProblem& problem,
                                         const std::vector<std::uint8_t>& labels,
                                         std::uint8_t alpha) {
  const std::size_t n = problem.nodes;
  std::vector<std::int32_t> node_of(n, -1);
  std::int32_t count = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] != alpha) node_of[v] = count++;
  }
  std::vector<std::uint8_t> out = labels;
  if (count == 0) return out;

  std::vector<double> e0(static_cast<std::size_t>(count), 0.0);
  std::vector<double> e1(static_cast<std::size_t>(count), 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const std::int32_t id = node_of[v];
    if (id < 0) continue;
    e0[static_cast<std::size_t>(id)] = problem.cost(v, labels[v]);
    e1[static_cast<std::size_t>(id)] = problem.cost(v, alpha);
  }

  MaxFlowGraph g(static_cast<std::size_t>(count), problem.edges.size());
  g.add_node(static_cast<std::size_t>(count));
  for (const auto& edge : problem.edges) {
    const std::int32_t a = node_of[edge.a];
    const std::int32_t b = node_of[edge.b];
    const double w = edge.weight;
    if (a < 0 && b < 0) continue;
    if (a < 0 || b < 0) {
      // One end already alpha: pay w unless the free end joins it.
      e0[static_cast<std::size_t>(a < 0 ? b : a)] += w;
      continue;
    }
    // A=E(0,0), B=E(0,1), C=E(1,0), D=E(1,1)=0.
    const double A = labels[edge.a] != labels[edge.b] ? w : 0.0;
    const double B = w;
    const double C = w;
    e1[static_cast<std::size_t>(a)] += C - A;
    e1[static_cast<std::size_t>(b)] -= C;
    const double pair = B + C - A;  // cost when x_a = 0, x_b = 1
    g.add_edge(a, b, pair, 0.0);
  }
  for (std::int32_t id = 0; id < count; ++id) {
    const double c0 = e0[static_cast<std::size_t>(id)];
    const double c1 = e1[static_cast<std::size_t>(id)];
    const double m = std::min(c0, c1);
    g.add_terminal_weights(id, c1 - m, c0 - m);
  }
  g.solve();
  for (std::size_t v = 0; v < n; ++v) {
    const std::int32_t id = node_of[v];
    if (id >= 0 && !g.in_source_segment(id)) out[v] = alpha;
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> alpha_expansion(const CrfProblem& problem,
                                          std::span<const std::uint8_t> init,
                                          ExpansionStats* stats, std::size_t max_cycles) {
  problem.validate();
  std::vector<std::uint8_t> labels(init.begin(), init.end());
  double current = energy(problem, labels);
  ExpansionStats local;
  local.initial_energy = current;

  for (std::size_t cycle = 0; cycle < max_cycles; ++cycle) {
    ++local.cycles;
    bool improved = false;
    for (std::size_t a = 0; a < problem.num_labels; ++a) {
      auto candidate = expansion_move(problem, labels, static_cast<std::uint8_t>(a));
      const double e = energy(problem, candidate);
      ++local.moves;
      // Relative slack keeps round-off from cycling forever.
      if (e < current - 1e-12 * std::max(1.0, std::abs(current))) {
        labels = std::move(candidate);
        current = e;
        improved = true;
        ++local.accepted;
      }
      local.trace.push_back(current);
    }
    if (!improved) break;
  }
  local.final_energy = current;
  if (stats) *stats = std::move(local);
  return labels;
}

}  // namespace wbseg
