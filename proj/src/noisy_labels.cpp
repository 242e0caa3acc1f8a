#include "distillhash/noisy_labels.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace dh {

void ThresholdPair::validate() const {
  if (!(t1 >= 0.0) || !(t2 >= t1))
    throw std::invalid_argument("thresholds must satisfy 0 <= t1 <= t2");
}

std::vector<double> row_squared_norms(const FeatureSet& features) {
  const auto n = static_cast<std::int64_t>(features.n_items());
  std::vector<double> norms(features.n_items());
  bool degenerate = false;
#pragma omp parallel for schedule(static) reduction(|| : degenerate)
  for (std::int64_t i = 0; i < n; ++i) {
    norms[i] = squared_norm(features.row(i));
    degenerate = degenerate || !(norms[i] > 0.0);
  }
  if (degenerate) throw DegenerateInput("degenerate feature vector");
  return norms;
}

ThresholdEstimate thresholds_from_distances(std::span<const double> distances, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("alpha and beta must be >= 0");
  if (distances.empty()) throw std::invalid_argument("no distances to estimate thresholds from");
  const double n = static_cast<double>(distances.size());
  const double mean = std::accumulate(distances.begin(), distances.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : distances) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw DegenerateInput("degenerate distance distribution");
  ThresholdEstimate est;
  est.mean = mean;
  est.stddev = sd;
  est.sampled_pairs = distances.size();
  est.thresholds.t1 = std::max(0.0, mean - alpha * sd);
  est.thresholds.t2 = mean + beta * sd;
  return est;
}

ThresholdEstimate estimate_thresholds(const FeatureSet& features, double alpha, double beta,
                                      std::size_t sample_budget, std::uint64_t seed) {
  if (sample_budget == 0) throw std::invalid_argument("sample_budget must be >= 1");
  const std::size_t n = features.n_items();
  const auto norms = row_squared_norms(features);
  const std::size_t total = n * (n - 1) / 2;

  std::vector<double> distances;
  if (total <= sample_budget) {
    // Row i owns the slots of pairs (i, j>i); offsets make the fill order-independent.
    distances.resize(total);
    const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < ni; ++i) {
      const std::size_t ui = static_cast<std::size_t>(i);
      std::size_t slot = ui * n - ui * (ui + 1) / 2;
      for (std::size_t j = ui + 1; j < n; ++j)
        distances[slot++] = cosine_from_dot(dot(features.row(ui), features.row(j)), norms[ui], norms[j]);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::pair<std::size_t, std::size_t>> sampled(sample_budget);
    for (auto& p : sampled) {
      std::size_t a = pick(rng), b = pick(rng);
      while (b == a) b = pick(rng);
      p = {a, b};
    }
    distances.resize(sample_budget);
    const auto nb = static_cast<std::int64_t>(sample_budget);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < nb; ++k) {
      auto [a, b] = sampled[k];
      distances[k] = cosine_from_dot(dot(features.row(a), features.row(b)), norms[a], norms[b]);
    }
  }
  return thresholds_from_distances(distances, alpha, beta);
}

NoisyPairLabels build_noisy_labels(const FeatureSet& features, const ThresholdPair& thresholds) {
  thresholds.validate();
  const std::size_t n = features.n_items();
  const auto norms = row_squared_norms(features);
  std::vector<std::vector<PairLabel>> per_row(n);
  const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < ni; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    auto& out = per_row[ui];
    for (std::size_t j = ui + 1; j < n; ++j) {
      const double d = cosine_from_dot(dot(features.row(ui), features.row(j)), norms[ui], norms[j]);
      if (d <= thresholds.t1) {
        out.push_back({static_cast<std::uint32_t>(ui), static_cast<std::uint32_t>(j), PairSign::kSimilar});
      } else if (d > thresholds.t2) {
        out.push_back({static_cast<std::uint32_t>(ui), static_cast<std::uint32_t>(j), PairSign::kDissimilar});
      }
    }
  }
  NoisyPairLabels result;
  result.n_items = n;
  std::size_t count = 0;
  for (const auto& r : per_row) count += r.size();
  result.pairs.reserve(count);
  for (auto& r : per_row) result.pairs.insert(result.pairs.end(), r.begin(), r.end());
  return result;
}

NeighborGraph build_neighbor_graph(const FeatureSet& features, std::size_t o) {
  const std::size_t n = features.n_items();
  if (o < 1 || o > n - 1)
    throw std::invalid_argument("neighborhood size o must be in [1, " + std::to_string(n - 1) + "]");
  const auto norms = row_squared_norms(features);
  NeighborGraph g;
  g.n_items = n;
  g.o = o;
  g.neighbors.resize(n * o);
  g.distances.resize(n * o);
  const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel
  {
    std::vector<std::pair<double, std::uint32_t>> row;
    row.reserve(n);
#pragma omp for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < ni; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      row.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == ui) continue;
        row.emplace_back(cosine_from_dot(dot(features.row(ui), features.row(j)), norms[ui], norms[j]),
                         static_cast<std::uint32_t>(j));
      }
      // (distance, index) lexicographic order realises the ascending-index tie break.
      std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(o), row.end());
      for (std::size_t k = 0; k < o; ++k) {
        g.neighbors[ui * o + k] = row[k].second;
        g.distances[ui * o + k] = row[k].first;
      }
    }
  }
  return g;
}

}  // namespace dh
