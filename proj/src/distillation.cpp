#include "distillhash/distillation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "distillhash/evaluation.hpp"

namespace dh {

FlipRateBounds flip_rate_bounds(const EtaField& eta, const NeighborGraph& graph, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("flip_rate_bounds: i must differ from j");
  if (graph.n_items != eta.n_items()) throw std::invalid_argument("flip_rate_bounds: item count mismatch");
  FlipRateBounds b;
  for (auto k : graph.of(i)) {
    for (auto l : graph.of(j)) {
      const double e = eta(k, l);
      b.rho_neg_max = std::min(b.rho_neg_max, e);
      b.rho_pos_max = std::min(b.rho_pos_max, 1.0 - e);
    }
  }
  return b;
}

bool pair_in_subsample(const DistillOptions& opts, std::size_t i, std::size_t j) {
  if (opts.pair_subsample >= 1.0) return true;
  // splitmix64 finalizer over (seed, i, j)
  std::uint64_t z = opts.seed ^ (static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ull) ^
                    (static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4Full);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53 < opts.pair_subsample;
}

DistilledPairSet distill_pairs(const EtaField& eta, const NeighborGraph& graph, const DistillOptions& opts) {
  const std::size_t n = eta.n_items();
  if (graph.n_items != n) throw std::invalid_argument("distill_pairs: neighbor graph built on a different item set");
  if (!(opts.pair_subsample > 0.0)) throw std::invalid_argument("pair_subsample must be > 0");

  // For a fixed i, lo[l] / hi[l] hold min / max of eta(k, l) over k in nn(i); the bounds for
  // (i, j) are then min / max over l in nn(j). min and max are exact, so this regrouping
  // returns the same values as the direct double loop.
  std::vector<std::vector<PairLabel>> per_row(n);
  const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel
  {
    std::vector<double> lo(n), hi(n);
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t si = 0; si < ni; ++si) {
      const auto i = static_cast<std::size_t>(si);
      std::fill(lo.begin(), lo.end(), 1.0);
      std::fill(hi.begin(), hi.end(), 0.0);
      for (auto k : graph.of(i)) {
        for (std::size_t l = 0; l < n; ++l) {
          const double e = eta(k, l);
          lo[l] = std::min(lo[l], e);
          hi[l] = std::max(hi[l], e);
        }
      }
      auto& out = per_row[i];
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!pair_in_subsample(opts, i, j)) continue;
        double rho_neg_max = 1.0, max_eta = 0.0;
        for (auto l : graph.of(j)) {
          rho_neg_max = std::min(rho_neg_max, lo[l]);
          max_eta = std::max(max_eta, hi[l]);
        }
        const double rho_pos_max = std::min(1.0, 1.0 - max_eta);
        const double e = eta(i, j);
        if (e > (1.0 + rho_neg_max) / 2.0) {
          out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), PairSign::kSimilar});
        } else if (e < (1.0 - rho_pos_max) / 2.0) {
          out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), PairSign::kDissimilar});
        }
      }
    }
  }
  DistilledPairSet result;
  for (auto& r : per_row) result.pairs.insert(result.pairs.end(), r.begin(), r.end());
  return result;
}

DistillStats summarize_distillation(const EtaField& eta, const DistilledPairSet& distilled,
                                    const DistillOptions& opts) {
  DistillStats s;
  const std::size_t n = eta.n_items();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!pair_in_subsample(opts, i, j)) continue;
      ++s.candidate_pairs;
      const double e = eta(i, j);
      auto bin = static_cast<std::size_t>(e * 10.0);
      s.eta_histogram[std::min<std::size_t>(bin, 9)]++;
    }
  }
  for (const auto& p : distilled.pairs) (p.s == PairSign::kSimilar ? s.distilled_pos : s.distilled_neg)++;
  s.fraction_distilled =
      s.candidate_pairs ? static_cast<double>(distilled.m()) / static_cast<double>(s.candidate_pairs) : 0.0;
  return s;
}

Theorem1Report theorem1_oracle(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.05)) throw std::invalid_argument("grid_step must be in (0, 0.05]");
  const std::int64_t n = std::llround(1.0 / grid_step);
  Theorem1Report rep;
  // eta = e/n, rho+ = a/n, rho- = b/n. Scaled by n^2:
  //   noisy eta * n^2 = (n - a) e + b (n - e)
  //   noisy eta < (1 - rho+)/2  <=>  2[(n - a) e + b (n - e)] < n (n - a)
  //   noisy eta > (1 + rho-)/2  <=>  2[(n - a) e + b (n - e)] > n (n + b)
  //   eta < 1/2  <=>  2e < n
  for (std::int64_t a = 0; a <= n; ++a) {
    for (std::int64_t b = 0; b <= n; ++b) {
      if (a + b > n) {
        rep.excluded_points += static_cast<std::size_t>(n + 1);
        continue;
      }
      for (std::int64_t e = 0; e <= n; ++e) {
        ++rep.grid_points;
        const std::int64_t noisy2 = 2 * ((n - a) * e + b * (n - e));
        const bool clean_neg = 2 * e < n;
        bool bad = false;
        if (noisy2 < n * (n - a)) {
          ++rep.negative_fires;
          bad = bad || !clean_neg;
        }
        if (noisy2 > n * (n + b)) {
          ++rep.positive_fires;
          bad = bad || clean_neg;
        }
        if (bad) {
          const double dn = static_cast<double>(n);
          rep.counterexamples.push_back({static_cast<double>(e) / dn, static_cast<double>(a) / dn,
                                         static_cast<double>(b) / dn});
        }
      }
    }
  }
  return rep;
}

AssumptionReport validate_assumption(const NoisyPairLabels& noisy, const PairTruth& truth) {
  AssumptionReport rep;
  std::size_t flipped_pos = 0, flipped_neg = 0;
  for (const auto& p : noisy.pairs) {
    if (truth(p.i, p.j) == PairSign::kSimilar) {
      ++rep.true_pos_pairs;
      if (p.s == PairSign::kDissimilar) ++flipped_pos;
    } else {
      ++rep.true_neg_pairs;
      if (p.s == PairSign::kSimilar) ++flipped_neg;
    }
  }
  if (rep.true_pos_pairs)
    rep.rho_pos_hat = static_cast<double>(flipped_pos) / static_cast<double>(rep.true_pos_pairs);
  if (rep.true_neg_pairs)
    rep.rho_neg_hat = static_cast<double>(flipped_neg) / static_cast<double>(rep.true_neg_pairs);
  rep.sum = rep.rho_pos_hat.value_or(0.0) + rep.rho_neg_hat.value_or(0.0);
  rep.holds = rep.sum <= 1.0;
  return rep;
}

AssumptionReport validate_assumption(const NoisyPairLabels& noisy, const LabelMatrix& labels) {
  return validate_assumption(noisy, [&labels](std::size_t i, std::size_t j) {
    return ground_truth_similarity(labels.row(i), labels.row(j)) ? PairSign::kSimilar : PairSign::kDissimilar;
  });
}

std::optional<double> label_fidelity(std::span<const PairLabel> pairs, const PairTruth& truth) {
  if (pairs.empty()) return std::nullopt;
  std::size_t agree = 0;
  for (const auto& p : pairs) agree += truth(p.i, p.j) == p.s;
  return static_cast<double>(agree) / static_cast<double>(pairs.size());
}

}  // namespace dh
