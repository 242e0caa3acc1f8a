#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "distillhash/core_math.hpp"

namespace dh {

struct EvalConfig {
  std::size_t R = 0;        // ranking cutoff for AP; 0 means the whole database
  std::size_t topN = 1000;  // largest n of the topN-precision curve
  std::size_t topn_points = 50;

  void validate() const;
};

/// Codes and labels of one side of a retrieval experiment.
struct LabeledCodes {
  const BinaryCodes& codes;
  const LabelMatrix& labels;
};

struct PrPoint {
  std::size_t radius = 0;
  std::optional<double> precision;  // null when no query retrieves anything at this radius
  std::optional<double> recall;     // null when no query has a relevant item
};

struct EvalReport {
  double map = 0.0;
  std::vector<std::pair<std::size_t, double>> topn_precision;
  std::vector<PrPoint> pr_curve;
};

/// True iff the two multi-hot rows share at least one label.
bool ground_truth_similarity(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Database indices by ascending Hamming distance to the query, ties by ascending index.
std::vector<std::uint32_t> rank_by_hamming(CodeView query, const BinaryCodes& db);

/// Mean of precision@r over relevant ranks r <= R, normalized by the relevant count in the top R.
double average_precision(std::span<const std::uint8_t> relevance, std::size_t R);

double mean_average_precision(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg);

/// n grid: topn_points values spread linearly over [1, topN], rounded and deduplicated.
std::vector<std::size_t> topn_grid(std::size_t topN, std::size_t points);

std::vector<std::pair<std::size_t, double>> topn_precision(LabeledCodes queries, LabeledCodes db,
                                                           const EvalConfig& cfg);

/// Hash-lookup precision/recall for every Hamming radius 0..K.
std::vector<PrPoint> precision_recall_curve(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg);

EvalReport evaluate(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg);

/// Random-hyperplane hashing: K seeded Gaussian directions, normalized; bit k = sign(<w_k, x>).
BinaryCodes lsh_baseline(const FeatureSet& features, std::size_t K, std::uint64_t seed);

}  // namespace dh
