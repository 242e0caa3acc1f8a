#include <algorithm>

#include "distillhash/reference.hpp"

namespace dh::reference {

NoisyPairLabels build_noisy_labels(const FeatureSet& features, const ThresholdPair& thresholds) {
  thresholds.validate();
  NoisyPairLabels out;
  out.n_items = features.n_items();
  for (std::size_t i = 0; i < features.n_items(); ++i) {
    for (std::size_t j = i + 1; j < features.n_items(); ++j) {
      const double d = cosine_distance(features.row(i), features.row(j));
      if (d <= thresholds.t1) {
        out.pairs.push_back(make_pair_label(i, j, PairSign::kSimilar));
      } else if (d > thresholds.t2) {
        out.pairs.push_back(make_pair_label(i, j, PairSign::kDissimilar));
      }
    }
  }
  return out;
}

NeighborGraph build_neighbor_graph(const FeatureSet& features, std::size_t o) {
  const std::size_t n = features.n_items();
  if (o < 1 || o > n - 1) throw std::invalid_argument("neighborhood size out of range");
  NeighborGraph g{n, o, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::uint32_t>> row;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.emplace_back(cosine_distance(features.row(i), features.row(j)), static_cast<std::uint32_t>(j));
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k < o; ++k) {
      g.neighbors.push_back(row[k].second);
      g.distances.push_back(row[k].first);
    }
  }
  return g;
}

DistilledPairSet distill_pairs(const EtaField& eta, const NeighborGraph& graph, const DistillOptions& opts) {
  DistilledPairSet out;
  const std::size_t n = eta.n_items();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!pair_in_subsample(opts, i, j)) continue;
      const auto b = flip_rate_bounds(eta, graph, i, j);
      const double e = eta(i, j);
      if (e > (1.0 + b.rho_neg_max) / 2.0) {
        out.pairs.push_back(make_pair_label(i, j, PairSign::kSimilar));
      } else if (e < (1.0 - b.rho_pos_max) / 2.0) {
        out.pairs.push_back(make_pair_label(i, j, PairSign::kDissimilar));
      }
    }
  }
  return out;
}

Eigen::MatrixXd forward_all(const EncoderModel& model, const FeatureSet& features) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(model.output_dim()), static_cast<Eigen::Index>(features.n_items()));
  for (std::size_t i = 0; i < features.n_items(); ++i) out.col(static_cast<Eigen::Index>(i)) = forward(model, features.row(i));
  return out;
}

double mean_average_precision(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg) {
  const std::size_t R = cfg.R == 0 ? db.codes.n_items() : cfg.R;
  double total = 0.0;
  for (std::size_t q = 0; q < queries.codes.n_items(); ++q) {
    const auto order = rank_by_hamming(queries.codes.row(q), db.codes);
    std::vector<std::uint8_t> rel(order.size());
    for (std::size_t r = 0; r < order.size(); ++r)
      rel[r] = ground_truth_similarity(queries.labels.row(q), db.labels.row(order[r])) ? 1 : 0;
    total += average_precision(rel, R);
  }
  return total / static_cast<double>(queries.codes.n_items());
}

}  // namespace dh::reference
