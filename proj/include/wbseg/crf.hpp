#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wbseg/classifier.hpp"
#include "wbseg/features.hpp"

namespace wbseg {

struct CrfParams {
  double lambda = 1.0;
  double sigma2 = 0.1;
  int connectivity = 6;  // 6 or 26
  double epsilon = 1e-6;

  void validate() const;
};

struct CrfEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;
};

/// Unaries per node (row-major, num_labels per node) and undirected
/// contrast-weighted Potts edges, each listed once.
struct CrfProblem {
  std::size_t num_labels = kNumClasses;
  std::size_t nodes = 0;
  std::vector<double> unary;
  std::vector<CrfEdge> edges;

  double cost(std::size_t node, std::size_t label) const { return unary[node * num_labels + label]; }
  void validate() const;
};

std::array<double, kNumClasses> unary_from_posterior(const ClassPosterior& p, double epsilon = 1e-6);

// lambda * exp(-||fv - fr||_2 / sigma2)
double pairwise_weight(std::span<const float> fv, std::span<const float> fr, const CrfParams& params);

// One node per in-mask row of `vf`; edges join in-mask grid neighbours.
CrfProblem build_crf_problem(const VoxelFeatures& vf, const Dims& dims,
                             std::span<const ClassPosterior> posteriors, const CrfParams& params);

double energy(const CrfProblem& problem, std::span<const std::uint8_t> labels);

struct ExpansionStats {
  std::size_t cycles = 0;
  std::size_t moves = 0;
  std::size_t accepted = 0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  std::vector<double> trace;  // energy after every move (accepted or not)
};

// Cycles over labels 0..L-1 until a full cycle gives no strict decrease.
std::vector<std::uint8_t> alpha_expansion(const CrfProblem& problem,
                                          std::span<const std::uint8_t> init,
                                          ExpansionStats* stats = nullptr,
                                          std::size_t max_cycles = 50);

// Per-node argmin of the unaries (lowest label on ties).
std::vector<std::uint8_t> unary_argmin(const CrfProblem& problem);

}  // namespace wbseg
