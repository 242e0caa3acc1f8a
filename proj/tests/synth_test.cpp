#include "distillhash/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "distillhash/seeds.hpp"

namespace dh {
namespace {

TEST(Synth, NoiselessClustersCollapse) {
  SyntheticSpec spec{3, 10, 5, 0.0, 4};
  const auto f = synth_generate(spec);
  ASSERT_EQ(f.n_items(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = i + 1; j < 30; ++j) {
      const double d = cosine_distance(f.row(i), f.row(j));
      if (i % 3 == j % 3) EXPECT_NEAR(d, 0.0, 1e-6);
      else EXPECT_NEAR(d, 1.0, 1e-6);
    }
  }
}

TEST(Synth, UnitNormAndSingleLabel) {
  const auto f = synth_generate({4, 25, 12, 0.5, 1});
  ASSERT_TRUE(f.has_labels());
  EXPECT_EQ(f.labels().n_classes(), 4u);
  for (std::size_t i = 0; i < f.n_items(); ++i) {
    EXPECT_NEAR(squared_norm(f.row(i)), 1.0, 1e-6);
    int on = 0;
    for (auto b : f.labels().row(i)) on += b;
    EXPECT_EQ(on, 1);
    EXPECT_EQ(f.labels().row(i)[i % 4], 1);
  }
}

TEST(Synth, Deterministic) {
  const SyntheticSpec spec{3, 20, 8, 0.35, 11};
  const auto a = synth_generate(spec), b = synth_generate(spec);
  EXPECT_EQ(a.data(), b.data());
  EXPECT_EQ(a.labels().bits(), b.labels().bits());
  SyntheticSpec other = spec;
  other.seed = 12;
  EXPECT_NE(synth_generate(other).data(), a.data());
}

TEST(Synth, QueriesShareCentersButNotPoints) {
  const SyntheticSpec spec{3, 20, 8, 0.0, 2};
  const auto db = synth_generate(spec);
  const auto q = synth_generate_queries(spec, 5);
  ASSERT_EQ(q.n_items(), 15u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_NEAR(cosine_distance(q.row(i), db.row(i % 3)), 0.0, 1e-6);
  SyntheticSpec noisy = spec;
  noisy.noise_sigma = 0.3;
  EXPECT_NE(synth_generate_queries(noisy, 20).data(), synth_generate(noisy).data());
}

TEST(Synth, Validation) {
  EXPECT_THROW(synth_generate({5, 10, 4, 0.1, 0}), std::invalid_argument);
  EXPECT_THROW(synth_generate({2, 10, 4, -0.1, 0}), std::invalid_argument);
  EXPECT_THROW(synth_generate({1, 1, 4, 0.1, 0}), std::invalid_argument);
  EXPECT_THROW(synth_generate_queries({2, 10, 4, 0.1, 0}, 0), std::invalid_argument);
}

TEST(Seeds, DistinctStreams) {
  static_assert(derive_seed(0, "eta/init") == derive_seed(0, "eta/init"));
  EXPECT_NE(derive_seed(0, "eta/init"), derive_seed(0, "hash/init"));
  EXPECT_NE(derive_seed(0, "eta/init"), derive_seed(1, "eta/init"));
}

}  // namespace
}  // namespace dh
