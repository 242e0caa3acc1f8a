#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "distillhash/core_math.hpp"
#include "distillhash/encoder.hpp"
#include "distillhash/noisy_labels.hpp"

namespace dh {

/// Upper bounds on the two flip rates of a pair, taken over its neighborhood cross pairs.
struct FlipRateBounds {
  double rho_pos_max = 1.0;  // bound on P(noisy = -1 | true = +1)
  double rho_neg_max = 1.0;  // bound on P(noisy = +1 | true = -1)
};

struct DistilledPairSet {
  std::vector<PairLabel> pairs;  // sorted by (i, j)
  std::size_t m() const { return pairs.size(); }
};

struct DistillOptions {
  /// Fraction of candidate pairs scanned; 1 scans every pair. Membership is a hash of
  /// (seed, i, j), so the subsample does not depend on scheduling.
  double pair_subsample = 1.0;
  std::uint64_t seed = 0;
};

/// min over (k,l) in nn(i) x nn(j) of eta(k,l) and of 1 - eta(k,l). The anchor pair itself is
/// never scanned because neighbor lists exclude their owner.
FlipRateBounds flip_rate_bounds(const EtaField& eta, const NeighborGraph& graph, std::size_t i, std::size_t j);

/// Emits (i,j,+1) when eta > (1 + rho_neg_max)/2 and (i,j,-1) when eta < (1 - rho_pos_max)/2,
/// over all unordered pairs i<j (strict inequalities).
DistilledPairSet distill_pairs(const EtaField& eta, const NeighborGraph& graph, const DistillOptions& opts = {});

bool pair_in_subsample(const DistillOptions& opts, std::size_t i, std::size_t j);

struct DistillStats {
  std::size_t candidate_pairs = 0;
  std::size_t distilled_pos = 0;
  std::size_t distilled_neg = 0;
  double fraction_distilled = 0.0;
  std::array<std::size_t, 10> eta_histogram{};  // eta over candidate pairs, 10 equal bins on [0,1]
};

DistillStats summarize_distillation(const EtaField& eta, const DistilledPairSet& distilled,
                                    const DistillOptions& opts = {});

/// Exhaustive check of the selection criterion on an (eta, rho+, rho-) grid.
struct Theorem1Report {
  std::size_t grid_points = 0;      // points satisfying rho+ + rho- <= 1
  std::size_t excluded_points = 0;  // points violating it, skipped
  std::size_t negative_fires = 0;   // noisy eta below (1 - rho+)/2
  std::size_t positive_fires = 0;   // noisy eta above (1 + rho-)/2
  std::vector<std::array<double, 3>> counterexamples;  // (eta, rho+, rho-)
  bool passed() const { return counterexamples.empty(); }
};

/// Grid values are k/n with n = round(1/grid_step); every comparison is done in exact integer
/// arithmetic on the scaled values.
Theorem1Report theorem1_oracle(double grid_step);

/// Noisy posterior from the clean posterior and flip rates.
inline double noisy_posterior(double eta, double rho_pos, double rho_neg) {
  return (1.0 - rho_pos) * eta + rho_neg * (1.0 - eta);
}

struct AssumptionReport {
  std::optional<double> rho_pos_hat;  // P(noisy = -1 | true = +1)
  std::optional<double> rho_neg_hat;  // P(noisy = +1 | true = -1)
  std::size_t true_pos_pairs = 0;
  std::size_t true_neg_pairs = 0;
  double sum = 0.0;  // over the available rates
  bool holds = true;
};

using PairTruth = std::function<PairSign(std::size_t, std::size_t)>;

AssumptionReport validate_assumption(const NoisyPairLabels& noisy, const PairTruth& truth);
/// Truth from shared labels (share-any-label rule).
AssumptionReport validate_assumption(const NoisyPairLabels& noisy, const LabelMatrix& labels);

/// Fraction of pairs whose label matches ground truth. Empty input yields nullopt.
std::optional<double> label_fidelity(std::span<const PairLabel> pairs, const PairTruth& truth);

}  // namespace dh
