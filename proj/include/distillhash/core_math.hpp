#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dh {

/// Raised when an input is numerically unusable (zero-norm vector, zero-variance sample).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Similarity label of a pair: +1 similar, -1 dissimilar.
enum class PairSign : std::int8_t { kDissimilar = -1, kSimilar = 1 };

inline int to_int(PairSign s) { return static_cast<int>(s); }
PairSign pair_sign_from_int(int v);

/// One labeled unordered pair, always stored with i < j.
struct PairLabel {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  PairSign s = PairSign::kSimilar;

  friend bool operator==(const PairLabel&, const PairLabel&) = default;
};

/// Builds a PairLabel, swapping the indices into canonical order. Self-pairs are rejected.
PairLabel make_pair_label(std::size_t a, std::size_t b, PairSign s);

/// N x C multi-hot semantic labels, one byte per entry.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t n_items, std::size_t n_classes, std::vector<std::uint8_t> bits);

  /// Single-label convenience: item i gets class classes[i].
  static LabelMatrix from_classes(std::span<const std::size_t> classes, std::size_t n_classes);

  std::size_t n_items() const { return n_items_; }
  std::size_t n_classes() const { return n_classes_; }
  std::span<const std::uint8_t> row(std::size_t i) const {
    return {bits_.data() + i * n_classes_, n_classes_};
  }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Rows restricted to the given item indices, in order.
  LabelMatrix select(std::span<const std::size_t> items) const;

 private:
  std::size_t n_items_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// N x D feature matrix stored as 32-bit floats (the on-disk precision), with optional labels.
///
/// Invariants enforced on construction: N >= 2, D >= 1, every entry finite, and when labels
/// are attached their row count matches N and every row has at least one bit set.
class FeatureSet {
 public:
  FeatureSet(std::size_t n_items, std::size_t dim, std::vector<float> features,
             std::optional<LabelMatrix> labels = std::nullopt);

  std::size_t n_items() const { return n_items_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t i) const { return {features_.data() + i * dim_, dim_}; }
  const std::vector<float>& data() const { return features_; }

  bool has_labels() const { return labels_.has_value(); }
  const LabelMatrix& labels() const;
  const std::optional<LabelMatrix>& maybe_labels() const { return labels_; }

  FeatureSet with_labels(LabelMatrix labels) const;
  FeatureSet without_labels() const;

 private:
  std::size_t n_items_;
  std::size_t dim_;
  std::vector<float> features_;
  std::optional<LabelMatrix> labels_;
};

/// Non-owning view of one packed code row.
struct CodeView {
  std::span<const std::uint8_t> bytes;
  std::size_t code_len = 0;
};

/// N bit-packed K-bit codes over {-1,+1}.
///
/// Layout: row-major; bit j of a row lives in byte j/8 at bit position j%8. A set bit means +1,
/// a clear bit means -1. Padding bits past K in the last byte of every row are zero.
class BinaryCodes {
 public:
  BinaryCodes() = default;
  BinaryCodes(std::size_t n_items, std::size_t code_len);
  /// Adopts packed rows; rejects nonzero padding.
  BinaryCodes(std::size_t n_items, std::size_t code_len, std::vector<std::uint8_t> bits);

  static std::size_t bytes_for(std::size_t code_len) { return (code_len + 7) / 8; }

  std::size_t n_items() const { return n_items_; }
  std::size_t code_len() const { return code_len_; }
  std::size_t bytes_per_row() const { return bytes_for(code_len_); }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  CodeView row(std::size_t i) const {
    return {{bits_.data() + i * bytes_per_row(), bytes_per_row()}, code_len_};
  }

  /// Writes a row from {-1,+1} entries (any nonnegative value counts as +1).
  void set_row(std::size_t i, std::span<const std::int8_t> signs);
  std::vector<std::int8_t> unpack_row(std::size_t i) const;

  BinaryCodes select(std::span<const std::size_t> items) const;

  friend bool operator==(const BinaryCodes&, const BinaryCodes&) = default;

 private:
  std::size_t n_items_ = 0;
  std::size_t code_len_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Packs a {-1,+1} vector into ceil(K/8) bytes using the layout above.
std::vector<std::uint8_t> pack_code(std::span<const std::int8_t> signs);
std::vector<std::int8_t> unpack_code(CodeView code);

template <typename T>
double dot(std::span<const T> u, std::span<const T> v) {
  double acc = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) acc += static_cast<double>(u[k]) * static_cast<double>(v[k]);
  return acc;
}

template <typename T>
double squared_norm(std::span<const T> u) {
  return dot(u, u);
}

/// 1 - cos from a precomputed dot product and squared norms. Shared by every distance path so
/// that cached and uncached computations agree bit for bit.
inline double cosine_from_dot(double uv, double uu, double vv) {
  double d = 1.0 - uv / std::sqrt(uu * vv);
  return d < 0.0 ? 0.0 : (d > 2.0 ? 2.0 : d);
}

/// Cosine distance 1 - u.v / (|u||v|), in [0, 2].
template <typename T>
double cosine_distance(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_distance: dimension mismatch");
  const double uu = squared_norm(u);
  const double vv = squared_norm(v);
  if (!(uu > 0.0) || !(vv > 0.0)) throw DegenerateInput("degenerate feature vector");
  return cosine_from_dot(dot(u, v), uu, vv);
}

/// Logistic function, evaluated without overflow for large |x|.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow or cancellation.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// sign(x) = +1 if x >= 0, else -1.
inline std::int8_t sign_of(double x) { return x >= 0.0 ? std::int8_t{1} : std::int8_t{-1}; }

std::vector<std::int8_t> sign_binarize(std::span<const double> v);

/// Number of differing bits. Throws std::invalid_argument when code lengths differ.
std::size_t hamming_distance(CodeView a, CodeView b);

/// {-1,+1} inner product, K - 2 * hamming_distance.
std::int64_t inner_product_codes(CodeView a, CodeView b);

}  // namespace dh
