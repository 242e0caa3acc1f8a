#pragma once

#include <cstdint>
#include <vector>

#include "distillhash/core_math.hpp"

namespace dh {

/// Distance thresholds: d <= t1 labels a pair similar, d > t2 dissimilar, the gap is unlabeled.
struct ThresholdPair {
  double t1 = 0.0;
  double t2 = 0.0;

  void validate() const;
};

/// Thresholds together with the sample statistics they were derived from.
struct ThresholdEstimate {
  ThresholdPair thresholds;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t sampled_pairs = 0;
};

struct NoisyPairLabels {
  std::size_t n_items = 0;
  std::vector<PairLabel> pairs;  // sorted by (i, j)
};

/// Top-o cosine neighbors of every item, nearest first; ties go to the smaller index.
struct NeighborGraph {
  std::size_t n_items = 0;
  std::size_t o = 0;
  std::vector<std::uint32_t> neighbors;  // n_items x o
  std::vector<double> distances;         // n_items x o

  std::span<const std::uint32_t> of(std::size_t i) const { return {neighbors.data() + i * o, o}; }
  std::span<const double> distances_of(std::size_t i) const { return {distances.data() + i * o, o}; }
};

/// Threshold rule: t1 = max(0, mean - alpha*std), t2 = mean + beta*std (population std).
ThresholdEstimate thresholds_from_distances(std::span<const double> distances, double alpha, double beta);

/// Samples up to sample_budget unordered pairs (all pairs when N(N-1)/2 fits the budget) and
/// applies thresholds_from_distances. Throws DegenerateInput on zero spread.
ThresholdEstimate estimate_thresholds(const FeatureSet& features, double alpha, double beta,
                                      std::size_t sample_budget, std::uint64_t seed);

/// Labels every unordered pair i<j: +1 if d <= t1, -1 if d > t2, omitted otherwise.
NoisyPairLabels build_noisy_labels(const FeatureSet& features, const ThresholdPair& thresholds);

NeighborGraph build_neighbor_graph(const FeatureSet& features, std::size_t o);

/// Squared norms of every row; throws DegenerateInput on a zero row.
std::vector<double> row_squared_norms(const FeatureSet& features);

}  // namespace dh
