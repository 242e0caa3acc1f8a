#include "distillhash/evaluation.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace dh {

void EvalConfig::validate() const {
  if (topN < 1) throw std::invalid_argument("topN must be >= 1");
  if (topn_points < 1) throw std::invalid_argument("topn_points must be >= 1");
}

bool ground_truth_similarity(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("ground_truth_similarity: label dimension mismatch");
  for (std::size_t c = 0; c < a.size(); ++c)
    if (a[c] && b[c]) return true;
  return false;
}

namespace {

void check_sides(const LabeledCodes& q, const LabeledCodes& db) {
  if (q.codes.n_items() == 0) throw std::invalid_argument("empty query set");
  if (db.codes.n_items() == 0) throw std::invalid_argument("empty database");
  if (q.codes.code_len() != db.codes.code_len())
    throw std::invalid_argument("query and database code lengths differ");
  if (q.labels.n_items() != q.codes.n_items()) throw std::invalid_argument("query labels do not match query codes");
  if (db.labels.n_items() != db.codes.n_items())
    throw std::invalid_argument("database labels do not match database codes");
  if (q.labels.n_classes() != db.labels.n_classes())
    throw std::invalid_argument("query and database label dimensions differ");
}

std::vector<std::uint32_t> distances_to(CodeView query, const BinaryCodes& db) {
  std::vector<std::uint32_t> d(db.n_items());
  for (std::size_t k = 0; k < db.n_items(); ++k) d[k] = static_cast<std::uint32_t>(hamming_distance(query, db.row(k)));
  return d;
}

// Counting sort by distance; visiting items in index order keeps ties ascending.
std::vector<std::uint32_t> order_by_distance(std::span<const std::uint32_t> dist, std::size_t K) {
  std::vector<std::size_t> start(K + 2, 0);
  for (auto d : dist) start[d + 1]++;
  for (std::size_t r = 1; r < start.size(); ++r) start[r] += start[r - 1];
  std::vector<std::uint32_t> order(dist.size());
  for (std::size_t k = 0; k < dist.size(); ++k) order[start[dist[k]]++] = static_cast<std::uint32_t>(k);
  return order;
}

std::vector<std::uint8_t> relevance_of(std::size_t q, const LabeledCodes& queries, const LabeledCodes& db) {
  std::vector<std::uint8_t> rel(db.codes.n_items());
  const auto qrow = queries.labels.row(q);
  for (std::size_t k = 0; k < rel.size(); ++k) rel[k] = ground_truth_similarity(qrow, db.labels.row(k)) ? 1 : 0;
  return rel;
}

// Relevance of the ranked list, one entry per rank.
std::vector<std::uint8_t> ranked_relevance(std::size_t q, const LabeledCodes& queries, const LabeledCodes& db) {
  const auto dist = distances_to(queries.codes.row(q), db.codes);
  const auto order = order_by_distance(dist, db.codes.code_len());
  const auto rel = relevance_of(q, queries, db);
  std::vector<std::uint8_t> ranked(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranked[r] = rel[order[r]];
  return ranked;
}

}  // namespace

std::vector<std::uint32_t> rank_by_hamming(CodeView query, const BinaryCodes& db) {
  if (query.code_len != db.code_len()) throw std::invalid_argument("rank_by_hamming: code length mismatch");
  const auto dist = distances_to(query, db);
  return order_by_distance(dist, db.code_len());
}

double average_precision(std::span<const std::uint8_t> relevance, std::size_t R) {
  const std::size_t cut = std::min(R, relevance.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < cut; ++r) {
    if (relevance[r]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return hits ? sum / static_cast<double>(hits) : 0.0;
}

double mean_average_precision(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg) {
  cfg.validate();
  check_sides(queries, db);
  const std::size_t nq = queries.codes.n_items();
  const std::size_t R = cfg.R == 0 ? db.codes.n_items() : cfg.R;
  std::vector<double> ap(nq);
  const auto n = static_cast<std::int64_t>(nq);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t q = 0; q < n; ++q) ap[q] = average_precision(ranked_relevance(q, queries, db), R);
  double total = 0.0;
  for (double v : ap) total += v;
  return total / static_cast<double>(nq);
}

std::vector<std::size_t> topn_grid(std::size_t topN, std::size_t points) {
  if (topN < 1 || points < 1) throw std::invalid_argument("topn_grid: topN and points must be >= 1");
  std::vector<std::size_t> grid;
  if (points == 1) return {topN};
  for (std::size_t k = 0; k < points; ++k) {
    const double x = 1.0 + static_cast<double>(k) * static_cast<double>(topN - 1) / static_cast<double>(points - 1);
    const auto v = static_cast<std::size_t>(std::llround(x));
    if (grid.empty() || grid.back() != v) grid.push_back(v);
  }
  return grid;
}

std::vector<std::pair<std::size_t, double>> topn_precision(LabeledCodes queries, LabeledCodes db,
                                                           const EvalConfig& cfg) {
  cfg.validate();
  check_sides(queries, db);
  if (cfg.topN > db.codes.n_items())
    throw std::invalid_argument("topN (" + std::to_string(cfg.topN) + ") exceeds database size (" +
                                std::to_string(db.codes.n_items()) + ")");
  const auto grid = topn_grid(cfg.topN, cfg.topn_points);
  const std::size_t nq = queries.codes.n_items();
  std::vector<double> per_query(nq * grid.size());
  const auto n = static_cast<std::int64_t>(nq);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t q = 0; q < n; ++q) {
    const auto ranked = ranked_relevance(q, queries, db);
    std::size_t hits = 0, pos = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (; pos < grid[g]; ++pos) hits += ranked[pos];
      per_query[q * grid.size() + g] = static_cast<double>(hits) / static_cast<double>(grid[g]);
    }
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (std::size_t q = 0; q < nq; ++q) s += per_query[q * grid.size() + g];
    out.emplace_back(grid[g], s / static_cast<double>(nq));
  }
  return out;
}

std::vector<PrPoint> precision_recall_curve(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg) {
  cfg.validate();
  check_sides(queries, db);
  const std::size_t K = db.codes.code_len();
  const std::size_t nq = queries.codes.n_items();
  constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> prec(nq * (K + 1)), rec(nq * (K + 1));
  const auto n = static_cast<std::int64_t>(nq);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t q = 0; q < n; ++q) {
    const auto dist = distances_to(queries.codes.row(q), db.codes);
    const auto rel = relevance_of(q, queries, db);
    std::vector<std::size_t> all(K + 1, 0), hit(K + 1, 0);
    for (std::size_t k = 0; k < dist.size(); ++k) {
      all[dist[k]]++;
      hit[dist[k]] += rel[k];
    }
    std::size_t total_rel = 0;
    for (auto h : hit) total_rel += h;
    std::size_t cum_all = 0, cum_hit = 0;
    for (std::size_t r = 0; r <= K; ++r) {
      cum_all += all[r];
      cum_hit += hit[r];
      prec[q * (K + 1) + r] = cum_all ? static_cast<double>(cum_hit) / static_cast<double>(cum_all) : kUndefined;
      rec[q * (K + 1) + r] = total_rel ? static_cast<double>(cum_hit) / static_cast<double>(total_rel) : kUndefined;
    }
  }
  std::vector<PrPoint> curve(K + 1);
  for (std::size_t r = 0; r <= K; ++r) {
    double ps = 0.0, rs = 0.0;
    std::size_t pc = 0, rc = 0;
    for (std::size_t q = 0; q < nq; ++q) {
      const double p = prec[q * (K + 1) + r], c = rec[q * (K + 1) + r];
      if (!std::isnan(p)) ps += p, ++pc;
      if (!std::isnan(c)) rs += c, ++rc;
    }
    curve[r].radius = r;
    if (pc) curve[r].precision = ps / static_cast<double>(pc);
    if (rc) curve[r].recall = rs / static_cast<double>(rc);
  }
  return curve;
}

EvalReport evaluate(LabeledCodes queries, LabeledCodes db, const EvalConfig& cfg) {
  EvalReport rep;
  rep.map = mean_average_precision(queries, db, cfg);
  rep.topn_precision = topn_precision(queries, db, cfg);
  rep.pr_curve = precision_recall_curve(queries, db, cfg);
  return rep;
}

BinaryCodes lsh_baseline(const FeatureSet& features, std::size_t K, std::uint64_t seed) {
  if (K < 1) throw std::invalid_argument("lsh_baseline: K must be >= 1");
  const std::size_t d = features.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> planes(K * d);
  for (std::size_t k = 0; k < K; ++k) {
    double nn = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      planes[k * d + c] = gauss(rng);
      nn += planes[k * d + c] * planes[k * d + c];
    }
    const double inv = 1.0 / std::sqrt(nn);
    for (std::size_t c = 0; c < d; ++c) planes[k * d + c] *= inv;
  }
  BinaryCodes codes(features.n_items(), K);
  const auto n = static_cast<std::int64_t>(features.n_items());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    auto x = features.row(static_cast<std::size_t>(i));
    std::vector<std::int8_t> signs(K);
    for (std::size_t k = 0; k < K; ++k) {
      double p = 0.0;
      for (std::size_t c = 0; c < d; ++c) p += planes[k * d + c] * static_cast<double>(x[c]);
      signs[k] = sign_of(p);
    }
    codes.set_row(static_cast<std::size_t>(i), signs);
  }
  return codes;
}

}  // namespace dh
