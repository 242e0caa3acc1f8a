#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "distillhash/core_math.hpp"
#include "distillhash/encoder.hpp"

namespace dh::io {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File contents violate the expected layout.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::filesystem::path file, std::uint64_t offset, const std::string& what);
  const std::filesystem::path& file() const { return file_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::filesystem::path file_;
  std::uint64_t offset_;
};

// All formats: 4 ASCII magic bytes, little-endian integers, IEEE-754 binary32 reals.
//   DHF1  u32 N, u32 D, N*D f32 row-major
//   DHL1  u32 N, u32 C, N*C bytes in {0,1}
//   DHC1  u32 N, u32 K, N rows of ceil(K/8) packed bytes
//   DHP1  u64 count, count records of (u32 i, u32 j, i8 s)
//   DHM1  u32 L, then per layer u32 in, u32 out, out*in f32 weights row-major, out f32 biases

void write_features(const std::filesystem::path& path, const FeatureSet& features);
/// Reads features only; attach labels with FeatureSet::with_labels.
FeatureSet read_features(const std::filesystem::path& path);

void write_labels(const std::filesystem::path& path, const LabelMatrix& labels);
LabelMatrix read_labels(const std::filesystem::path& path);

void write_codes(const std::filesystem::path& path, const BinaryCodes& codes);
BinaryCodes read_codes(const std::filesystem::path& path);

void write_pairs(const std::filesystem::path& path, std::span<const PairLabel> pairs);
std::vector<PairLabel> read_pairs(const std::filesystem::path& path);

/// Weights are rounded to binary32 on write.
void write_model(const std::filesystem::path& path, const EncoderModel& model);
EncoderModel read_model(const std::filesystem::path& path);

/// Raw file contents, for byte-level comparisons.
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace dh::io
