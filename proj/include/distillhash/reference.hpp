#pragma once

#include <Eigen/Dense>

#include "distillhash/distillation.hpp"
#include "distillhash/encoder.hpp"
#include "distillhash/evaluation.hpp"
#include "distillhash/noisy_labels.hpp"

/// Single-threaded, literal versions of the OpenMP kernels. They share the scalar primitives of
/// core_math but none of the kernels' caching or loop restructuring, and exist so tests and the
/// benchmark can compare against them.
namespace dh::reference {

NoisyPairLabels build_noisy_labels(const FeatureSet& features, const ThresholdPair& thresholds);

/// Full sort of every row instead of a partial selection.
NeighborGraph build_neighbor_graph(const FeatureSet& features, std::size_t o);

/// Calls flip_rate_bounds for each pair.
DistilledPairSet distill_pairs(const EtaField& eta, const NeighborGraph& graph, const DistillOptions& opts = {});

/// One forward() per item.
Eigen::MatrixXd forward_all(const EncoderModel& model, const FeatureSet& features);

/// rank_by_hamming + average_precision per query.
double mean_average_precision(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg);

}  // namespace dh::reference
