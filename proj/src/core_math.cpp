#include "distillhash/core_math.hpp"

#include <bit>
#include <cstring>

namespace dh {

PairSign pair_sign_from_int(int v) {
  if (v == 1) return PairSign::kSimilar;
  if (v == -1) return PairSign::kDissimilar;
  throw std::invalid_argument("pair label must be +1 or -1, got " + std::to_string(v));
}

PairLabel make_pair_label(std::size_t a, std::size_t b, PairSign s) {
  if (a == b) throw std::invalid_argument("self-pairs are not valid pair labels");
  if (a > b) std::swap(a, b);
  return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), s};
}

LabelMatrix::LabelMatrix(std::size_t n_items, std::size_t n_classes, std::vector<std::uint8_t> bits)
    : n_items_(n_items), n_classes_(n_classes), bits_(std::move(bits)) {
  if (n_classes_ == 0) throw std::invalid_argument("label matrix needs at least one class");
  if (bits_.size() != n_items_ * n_classes_)
    throw std::invalid_argument("label matrix size does not match N x C");
  for (auto& b : bits_) {
    if (b > 1) throw std::invalid_argument("label entries must be 0 or 1");
  }
}

LabelMatrix LabelMatrix::from_classes(std::span<const std::size_t> classes, std::size_t n_classes) {
  std::vector<std::uint8_t> bits(classes.size() * n_classes, 0);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= n_classes) throw std::invalid_argument("class index out of range");
    bits[i * n_classes + classes[i]] = 1;
  }
  return {classes.size(), n_classes, std::move(bits)};
}

LabelMatrix LabelMatrix::select(std::span<const std::size_t> items) const {
  std::vector<std::uint8_t> bits;
  bits.reserve(items.size() * n_classes_);
  for (auto i : items) {
    auto r = row(i);
    bits.insert(bits.end(), r.begin(), r.end());
  }
  return {items.size(), n_classes_, std::move(bits)};
}

FeatureSet::FeatureSet(std::size_t n_items, std::size_t dim, std::vector<float> features,
                       std::optional<LabelMatrix> labels)
    : n_items_(n_items), dim_(dim), features_(std::move(features)), labels_(std::move(labels)) {
  if (n_items_ < 2) throw std::invalid_argument("feature set needs at least 2 items");
  if (dim_ < 1) throw std::invalid_argument("feature set needs dimension >= 1");
  if (features_.size() != n_items_ * dim_)
    throw std::invalid_argument("feature buffer size does not match N x D");
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (!std::isfinite(features_[k]))
      throw std::invalid_argument("non-finite feature at item " + std::to_string(k / dim_));
  }
  if (labels_) {
    if (labels_->n_items() != n_items_)
      throw std::invalid_argument("label rows do not match feature rows");
    for (std::size_t i = 0; i < n_items_; ++i) {
      bool any = false;
      for (auto b : labels_->row(i)) any = any || b != 0;
      if (!any) throw std::invalid_argument("item " + std::to_string(i) + " has no label");
    }
  }
}

const LabelMatrix& FeatureSet::labels() const {
  if (!labels_) throw std::logic_error("feature set carries no labels");
  return *labels_;
}

FeatureSet FeatureSet::with_labels(LabelMatrix labels) const {
  return {n_items_, dim_, features_, std::move(labels)};
}

FeatureSet FeatureSet::without_labels() const { return {n_items_, dim_, features_}; }

BinaryCodes::BinaryCodes(std::size_t n_items, std::size_t code_len)
    : n_items_(n_items), code_len_(code_len), bits_(n_items * bytes_for(code_len), 0) {
  if (code_len_ == 0) throw std::invalid_argument("code length must be >= 1");
}

BinaryCodes::BinaryCodes(std::size_t n_items, std::size_t code_len, std::vector<std::uint8_t> bits)
    : n_items_(n_items), code_len_(code_len), bits_(std::move(bits)) {
  if (code_len_ == 0) throw std::invalid_argument("code length must be >= 1");
  const std::size_t bpr = bytes_per_row();
  if (bits_.size() != n_items_ * bpr) throw std::invalid_argument("code buffer size mismatch");
  const unsigned used = static_cast<unsigned>(code_len_ % 8);
  if (used != 0) {
    const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xFFu << used);
    for (std::size_t i = 0; i < n_items_; ++i) {
      if (bits_[i * bpr + bpr - 1] & pad_mask)
        throw std::invalid_argument("nonzero padding bits in code row " + std::to_string(i));
    }
  }
}

void BinaryCodes::set_row(std::size_t i, std::span<const std::int8_t> signs) {
  if (signs.size() != code_len_) throw std::invalid_argument("code row length mismatch");
  auto packed = pack_code(signs);
  std::memcpy(bits_.data() + i * bytes_per_row(), packed.data(), packed.size());
}

std::vector<std::int8_t> BinaryCodes::unpack_row(std::size_t i) const { return unpack_code(row(i)); }

BinaryCodes BinaryCodes::select(std::span<const std::size_t> items) const {
  BinaryCodes out(items.size(), code_len_);
  const std::size_t bpr = bytes_per_row();
  for (std::size_t r = 0; r < items.size(); ++r)
    std::memcpy(out.bits_.data() + r * bpr, bits_.data() + items[r] * bpr, bpr);
  return out;
}

std::vector<std::uint8_t> pack_code(std::span<const std::int8_t> signs) {
  std::vector<std::uint8_t> out(BinaryCodes::bytes_for(signs.size()), 0);
  for (std::size_t j = 0; j < signs.size(); ++j) {
    if (signs[j] != 1 && signs[j] != -1) throw std::invalid_argument("code entries must be +1 or -1");
    if (signs[j] == 1) out[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
  }
  return out;
}

std::vector<std::int8_t> unpack_code(CodeView code) {
  std::vector<std::int8_t> out(code.code_len);
  for (std::size_t j = 0; j < code.code_len; ++j)
    out[j] = (code.bytes[j / 8] >> (j % 8)) & 1u ? std::int8_t{1} : std::int8_t{-1};
  return out;
}

std::vector<std::int8_t> sign_binarize(std::span<const double> v) {
  std::vector<std::int8_t> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = sign_of(v[k]);
  return out;
}

std::size_t hamming_distance(CodeView a, CodeView b) {
  if (a.code_len != b.code_len || a.bytes.size() != b.bytes.size())
    throw std::invalid_argument("hamming_distance: code length mismatch");
  const std::size_t n = a.bytes.size();
  std::size_t sum = 0;
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    std::uint64_t wa, wb;
    std::memcpy(&wa, a.bytes.data() + k, 8);
    std::memcpy(&wb, b.bytes.data() + k, 8);
    sum += static_cast<std::size_t>(std::popcount(wa ^ wb));
  }
  for (; k < n; ++k)
    sum += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a.bytes[k] ^ b.bytes[k])));
  return sum;
}

// Counts agreeing bits byte by byte (matching +1s plus matching -1s) rather than going
// through the Hamming distance, so the two can be checked against each other.
std::int64_t inner_product_codes(CodeView a, CodeView b) {
  if (a.code_len != b.code_len || a.bytes.size() != b.bytes.size())
    throw std::invalid_argument("inner_product_codes: code length mismatch");
  std::int64_t agree = 0;
  for (std::size_t k = 0; k < a.bytes.size(); ++k) {
    const std::size_t width = std::min<std::size_t>(8, a.code_len - 8 * k);
    const unsigned mask = (1u << width) - 1u;
    const unsigned both_pos = a.bytes[k] & b.bytes[k] & mask;
    const unsigned both_neg = ~a.bytes[k] & ~b.bytes[k] & mask;
    agree += std::popcount(both_pos) + std::popcount(both_neg);
  }
  return 2 * agree - static_cast<std::int64_t>(a.code_len);
}

}  // namespace dh
