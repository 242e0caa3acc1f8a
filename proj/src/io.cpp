#include "distillhash/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dh::io {

FormatError::FormatError(std::filesystem::path file, std::uint64_t offset, const std::string& what)
    : std::runtime_error(file.string() + ": byte offset " + std::to_string(offset) + ": " + what),
      file_(std::move(file)),
      offset_(offset) {}

namespace {

constexpr std::size_t kMagicLen = 4;

class ByteWriter {
 public:
  void magic(const char (&m)[kMagicLen + 1]) { buf_.insert(buf_.end(), m, m + kMagicLen); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("failed writing " + path.string());
  }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::filesystem::path path) : path_(std::move(path)), data_(read_bytes(path_)) {}

  void magic(const char (&m)[kMagicLen + 1]) {
    need(kMagicLen, "magic");
    if (std::string_view(reinterpret_cast<const char*>(data_.data()), kMagicLen) != std::string_view(m, kMagicLen))
      throw FormatError(path_, 0, std::string("bad magic, expected \"") + m + "\"");
    pos_ = kMagicLen;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    std::span<const std::uint8_t> s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  /// Checks that `count` items of `item_size` bytes remain, before allocating for them.
  void need_items(std::uint64_t count, std::uint64_t item_size, const char* what) {
    const std::uint64_t remaining = data_.size() - pos_;
    if (item_size != 0 && count > remaining / item_size)
      throw FormatError(path_, pos_, std::string("truncated ") + what);
  }
  void end() const {
    if (pos_ != data_.size()) throw FormatError(path_, pos_, "trailing bytes after payload");
  }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(std::size_t offset, const std::string& what) const { throw FormatError(path_, offset, what); }

 private:
  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) throw FormatError(path_, pos_, std::string("truncated ") + what);
  }

  std::filesystem::path path_;
  std::vector<std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFull) throw std::invalid_argument(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  auto b = read_bytes(path);
  return {b.begin(), b.end()};
}

void write_features(const std::filesystem::path& path, const FeatureSet& features) {
  ByteWriter w;
  w.magic("DHF1");
  w.u32(checked_u32(features.n_items(), "N"));
  w.u32(checked_u32(features.dim(), "D"));
  for (float v : features.data()) w.f32(v);
  w.save(path);
}

FeatureSet read_features(const std::filesystem::path& path) {
  ByteReader r(path);
  r.magic("DHF1");
  const std::uint32_t n = r.u32("item count");
  const std::uint32_t d = r.u32("dimension");
  if (n < 2) r.fail(4, "feature file needs at least 2 items");
  if (d < 1) r.fail(8, "feature dimension must be >= 1");
  r.need_items(static_cast<std::uint64_t>(n) * d, 4, "feature payload");
  std::vector<float> values(static_cast<std::size_t>(n) * d);
  for (auto& v : values) {
    v = r.f32("feature payload");
    if (!std::isfinite(v)) r.fail(r.pos() - 4, "non-finite feature value");
  }
  r.end();
  return {n, d, std::move(values)};
}

void write_labels(const std::filesystem::path& path, const LabelMatrix& labels) {
  ByteWriter w;
  w.magic("DHL1");
  w.u32(checked_u32(labels.n_items(), "N"));
  w.u32(checked_u32(labels.n_classes(), "C"));
  w.bytes(labels.bits());
  w.save(path);
}

LabelMatrix read_labels(const std::filesystem::path& path) {
  ByteReader r(path);
  r.magic("DHL1");
  const std::uint32_t n = r.u32("item count");
  const std::uint32_t c = r.u32("class count");
  if (c == 0) r.fail(8, "class count must be >= 1");
  const std::size_t payload = r.pos();
  auto raw = r.bytes(static_cast<std::size_t>(n) * c, "label payload");
  for (std::size_t k = 0; k < raw.size(); ++k)
    if (raw[k] > 1) r.fail(payload + k, "label byte must be 0 or 1");
  r.end();
  return {n, c, std::vector<std::uint8_t>(raw.begin(), raw.end())};
}

void write_codes(const std::filesystem::path& path, const BinaryCodes& codes) {
  ByteWriter w;
  w.magic("DHC1");
  w.u32(checked_u32(codes.n_items(), "N"));
  w.u32(checked_u32(codes.code_len(), "K"));
  w.bytes(codes.bits());
  w.save(path);
}

BinaryCodes read_codes(const std::filesystem::path& path) {
  ByteReader r(path);
  r.magic("DHC1");
  const std::uint32_t n = r.u32("item count");
  const std::uint32_t k = r.u32("code length");
  if (k == 0) r.fail(8, "code length must be >= 1");
  const std::size_t bpr = BinaryCodes::bytes_for(k);
  const std::size_t payload = r.pos();
  auto raw = r.bytes(static_cast<std::size_t>(n) * bpr, "code payload");
  r.end();
  if (k % 8 != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xFFu << (k % 8));
    for (std::size_t i = 0; i < n; ++i)
      if (raw[i * bpr + bpr - 1] & pad_mask) r.fail(payload + i * bpr + bpr - 1, "nonzero padding bits");
  }
  return {n, k, std::vector<std::uint8_t>(raw.begin(), raw.end())};
}

void write_pairs(const std::filesystem::path& path, std::span<const PairLabel> pairs) {
  ByteWriter w;
  w.magic("DHP1");
  w.u64(pairs.size());
  for (const auto& p : pairs) {
    w.u32(p.i);
    w.u32(p.j);
    w.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(p.s)));
  }
  w.save(path);
}

std::vector<PairLabel> read_pairs(const std::filesystem::path& path) {
  ByteReader r(path);
  r.magic("DHP1");
  const std::uint64_t count = r.u64("pair count");
  r.need_items(count, 9, "pair records");
  std::vector<PairLabel> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::size_t at = r.pos();
    PairLabel p;
    p.i = r.u32("pair index i");
    p.j = r.u32("pair index j");
    const auto s = static_cast<std::int8_t>(r.u8("pair label"));
    if (s != 1 && s != -1) r.fail(at + 8, "pair label must be +1 or -1");
    if (p.i >= p.j) r.fail(at, "pair indices must satisfy i < j");
    p.s = static_cast<PairSign>(s);
    pairs.push_back(p);
  }
  r.end();
  return pairs;
}

void write_model(const std::filesystem::path& path, const EncoderModel& model) {
  ByteWriter w;
  w.magic("DHM1");
  w.u32(checked_u32(model.layers().size(), "layer count"));
  for (const auto& L : model.layers()) {
    w.u32(checked_u32(static_cast<std::size_t>(L.weights.cols()), "layer input"));
    w.u32(checked_u32(static_cast<std::size_t>(L.weights.rows()), "layer output"));
    for (Eigen::Index o = 0; o < L.weights.rows(); ++o)
      for (Eigen::Index i = 0; i < L.weights.cols(); ++i) w.f32(static_cast<float>(L.weights(o, i)));
    for (Eigen::Index o = 0; o < L.bias.size(); ++o) w.f32(static_cast<float>(L.bias(o)));
  }
  w.save(path);
}

EncoderModel read_model(const std::filesystem::path& path) {
  ByteReader r(path);
  r.magic("DHM1");
  const std::uint32_t count = r.u32("layer count");
  if (count == 0) r.fail(4, "model has no layers");
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::size_t at = r.pos();
    const std::uint32_t in = r.u32("layer input dim");
    const std::uint32_t out = r.u32("layer output dim");
    if (in == 0 || out == 0) r.fail(at, "layer dimensions must be >= 1");
    if (!layers.empty() && static_cast<std::uint32_t>(layers.back().weights.rows()) != in)
      r.fail(at, "layer input dim does not match previous layer output");
    r.need_items(static_cast<std::uint64_t>(out) * (in + 1), 4, "layer parameters");
    DenseLayer L{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (std::uint32_t o = 0; o < out; ++o)
      for (std::uint32_t i = 0; i < in; ++i) L.weights(o, i) = r.f32("weights");
    for (std::uint32_t o = 0; o < out; ++o) L.bias(o) = r.f32("biases");
    if (!L.weights.allFinite() || !L.bias.allFinite()) r.fail(at, "non-finite parameter");
    layers.push_back(std::move(L));
  }
  r.end();
  return EncoderModel(std::move(layers));
}

}  // namespace dh::io
