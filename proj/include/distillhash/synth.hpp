#pragma once

#include <cstdint>

#include "distillhash/core_math.hpp"

namespace dh {

/// Gaussian clusters around orthonormal centers, projected onto the unit sphere.
struct SyntheticSpec {
  std::size_t n_clusters = 3;
  std::size_t points_per_cluster = 200;
  std::size_t dim = 64;
  double noise_sigma = 0.35;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Item i belongs to cluster i % n_clusters; labels are single-hot.
FeatureSet synth_generate(const SyntheticSpec& spec);

/// Held-out points drawn around the same centers as synth_generate(spec), from an independent
/// noise stream.
FeatureSet synth_generate_queries(const SyntheticSpec& spec, std::size_t queries_per_cluster);

}  // namespace dh
