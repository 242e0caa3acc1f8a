#include "distillhash/encoder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "distillhash/evaluation.hpp"
#include "distillhash/reference.hpp"
#include "distillhash/synth.hpp"
#include "support/gradcheck.hpp"

namespace dh {
namespace {

std::vector<PairLabel> truth_pairs(const FeatureSet& f) {
  std::vector<PairLabel> pairs;
  for (std::uint32_t i = 0; i < f.n_items(); ++i)
    for (std::uint32_t j = i + 1; j < f.n_items(); ++j)
      pairs.push_back({i, j,
                       ground_truth_similarity(f.labels().row(i), f.labels().row(j)) ? PairSign::kSimilar
                                                                                      : PairSign::kDissimilar});
  return pairs;
}

TEST(InitEncoder, ShapesAndZeroBias) {
  const std::vector<std::size_t> dims{4, 3};
  const auto m = init_encoder(dims, 99);
  ASSERT_EQ(m.layers().size(), 1u);
  EXPECT_EQ(m.layers()[0].weights.rows(), 3);
  EXPECT_EQ(m.layers()[0].weights.cols(), 4);
  EXPECT_TRUE(m.layers()[0].bias.isZero(0.0));
  EXPECT_EQ(m.input_dim(), 4u);
  EXPECT_EQ(m.output_dim(), 3u);
  EXPECT_EQ(m.parameter_count(), 15u);
}

TEST(InitEncoder, SeedDeterminism) {
  const std::vector<std::size_t> dims{6, 5, 2};
  EXPECT_EQ(init_encoder(dims, 1), init_encoder(dims, 1));
  EXPECT_FALSE(init_encoder(dims, 1) == init_encoder(dims, 2));
}

TEST(InitEncoder, GlorotRange) {
  const std::vector<std::size_t> dims{30, 20};
  const auto m = init_encoder(dims, 3);
  const double limit = std::sqrt(6.0 / 50.0);
  EXPECT_LE(m.layers()[0].weights.cwiseAbs().maxCoeff(), limit);
  EXPECT_THROW(init_encoder(std::vector<std::size_t>{3}, 0), std::invalid_argument);
  EXPECT_THROW(init_encoder(std::vector<std::size_t>{3, 0}, 0), std::invalid_argument);
}

TEST(Forward, ZeroModelGivesZeros) {
  std::vector<DenseLayer> layers{{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)},
                                 {Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2)}};
  const EncoderModel m(layers);
  const std::vector<double> x{1, -2, 3};
  EXPECT_TRUE(forward(m, x).isZero(0.0));
}

TEST(Forward, BoundedOutput) {
  const std::vector<std::size_t> dims{3, 8, 4};
  auto m = init_encoder(dims, 5);
  for (auto& L : m.mutable_layers()) L.weights *= 50.0;
  const std::vector<double> x{1e3, -1e3, 7};
  const auto y = forward(m, x);
  for (Eigen::Index k = 0; k < y.size(); ++k) EXPECT_LE(std::abs(y(k)), 1.0);
}

TEST(Forward, TanhSaturation) {
  const EncoderModel m({{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)}});
  const std::vector<double> x{10, -10};
  const auto y = forward(m, x);
  EXPECT_NEAR(y(0), 1.0, 1e-8);
  EXPECT_NEAR(y(1), -1.0, 1e-8);
}

TEST(Forward, HiddenLayersRectify) {
  // A negative hidden pre-activation must not reach the output.
  const EncoderModel m({{Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::VectorXd::Zero(1)},
                        {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1)}});
  const std::vector<double> x{2.0};
  EXPECT_EQ(forward(m, x)(0), 0.0);
}

TEST(Forward, DimensionMismatch) {
  const auto m = init_encoder(std::vector<std::size_t>{3, 2}, 0);
  const std::vector<double> x{1, 2};
  EXPECT_THROW(forward(m, x), std::invalid_argument);
}

TEST(Forward, BatchedMatchesSingle) {
  SyntheticSpec spec;
  spec.points_per_cluster = 150;
  spec.dim = 16;
  const auto f = synth_generate(spec);
  const auto m = init_encoder(std::vector<std::size_t>{16, 12, 5}, 2);
  const auto z = forward_all(m, f);
  ASSERT_EQ(z.cols(), 450);
  EXPECT_TRUE(z.isApprox(reference::forward_all(m, f), 1e-12));
}

TEST(PairLoss, Values) {
  const std::vector<double> a{1, 0}, b{0, 1};
  EXPECT_NEAR(pairwise_logistic_loss(a, b, PairSign::kSimilar), std::log(2.0), 1e-15);
  EXPECT_NEAR(pairwise_logistic_loss(a, b, PairSign::kDissimilar), std::log(2.0), 1e-15);
  std::vector<double> big(40, 1.0);
  EXPECT_LT(pairwise_logistic_loss(big, big, PairSign::kSimilar), 1e-12);
  EXPECT_GT(pairwise_logistic_loss(big, big, PairSign::kDissimilar), 39.0);
  EXPECT_NEAR(pairwise_logistic_loss(big, big, PairSign::kSimilar, 0.5), std::log1p(std::exp(-20.0)), 1e-15);
}

TEST(PairLoss, MeanMatchesLogLikelihood) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const Eigen::MatrixXd z = Eigen::MatrixXd::NullaryExpr(6, 30, [&] { return u(rng); });
  std::vector<PairLabel> pairs;
  for (std::uint32_t i = 0; i < 30; ++i)
    for (std::uint32_t j = i + 1; j < 30; j += 3) pairs.push_back({i, j, (i + j) % 3 ? PairSign::kSimilar : PairSign::kDissimilar});
  double ll = 0.0;
  for (const auto& p : pairs) {
    const double theta = z.col(p.i).dot(z.col(p.j));
    const double sp = p.s == PairSign::kSimilar ? 1.0 : 0.0;
    const double sig = 1.0 / (1.0 + std::exp(-theta));
    ll += sp * std::log(sig) + (1.0 - sp) * std::log(1.0 - sig);
  }
  EXPECT_NEAR(mean_pair_loss(z, pairs), -ll / double(pairs.size()), 1e-12);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = oracle::random_grad_instance(seed);
    const auto res = oracle::check_gradient(inst.model, inst.batch, inst.scale);
    EXPECT_LE(res.max_rel_error, 1e-4) << "seed " << seed;
    EXPECT_GT(res.checked, 0u);
  }
}

TEST(Gradient, LossAgreesWithBatchLoss) {
  auto inst = oracle::random_grad_instance(3);
  EXPECT_DOUBLE_EQ(loss_gradient(inst.model, inst.batch, inst.scale).loss, batch_loss(inst.model, inst.batch, inst.scale));
}

TEST(Gradient, FlatInSaturatedRegion) {
  const EncoderModel m({{Eigen::MatrixXd::Constant(40, 1, 30.0), Eigen::VectorXd::Zero(40)}});
  const std::vector<double> x{1.0}, y{2.0};
  const std::vector<PairSample> batch{{x, y, PairSign::kSimilar}, {y, y, PairSign::kSimilar}};
  const auto lg = loss_gradient(m, batch);
  EXPECT_LT(lg.loss, 1e-12);
  double norm = 0.0;
  for (const auto& g : lg.grad) norm += g.weights.squaredNorm() + g.bias.squaredNorm();
  EXPECT_LT(std::sqrt(norm), 1e-10);
}

TEST(Gradient, DuplicatedBatchMatchesSingle) {
  auto inst = oracle::random_grad_instance(11);
  std::vector<PairSample> one{inst.batch[0]}, dup{inst.batch[0], inst.batch[0], inst.batch[0]};
  const auto a = loss_gradient(inst.model, one), b = loss_gradient(inst.model, dup);
  EXPECT_NEAR(a.loss, b.loss, 1e-15);
  for (std::size_t l = 0; l < a.grad.size(); ++l) {
    EXPECT_TRUE(a.grad[l].weights.isApprox(b.grad[l].weights, 1e-14));
    EXPECT_TRUE(a.grad[l].bias.isApprox(b.grad[l].bias, 1e-14) || a.grad[l].bias.isZero(1e-300));
  }
}

class TrainTest : public ::testing::Test {
 protected:
  static FeatureSet two_clusters(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_clusters = 2;
    spec.points_per_cluster = 40;
    spec.dim = 8;
    spec.noise_sigma = 0.3;
    spec.seed = seed;
    return synth_generate(spec);
  }
};

TEST_F(TrainTest, LossDecreases) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto f = two_clusters(seed);
    const auto st = fit_standardizer(f);
    const auto pairs = truth_pairs(f);
    TrainConfig cfg;
    cfg.max_iters = 300;
    cfg.seed = seed;
    const auto res = train_encoder(init_encoder(std::vector<std::size_t>{8, 16, 4}, seed), pairs, standardize(f, st), cfg);
    ASSERT_EQ(res.loss_trace.size(), res.iterations);
    EXPECT_LT(res.loss_trace.back(), res.loss_trace.front()) << "seed " << seed;
    const auto z0 = forward_all(init_encoder(std::vector<std::size_t>{8, 16, 4}, seed), standardize(f, st));
    EXPECT_LT(mean_pair_loss(forward_all(res.model, standardize(f, st)), pairs), mean_pair_loss(z0, pairs));
  }
}

TEST_F(TrainTest, ZeroIterationsReturnsModel) {
  const auto f = two_clusters(0);
  const auto m = init_encoder(std::vector<std::size_t>{8, 3}, 1);
  TrainConfig cfg;
  cfg.max_iters = 0;
  const auto res = train_encoder(m, truth_pairs(f), f, cfg);
  EXPECT_EQ(res.model, m);
  EXPECT_TRUE(res.loss_trace.empty());
  EXPECT_EQ(res.iterations, 0u);
}

TEST_F(TrainTest, Deterministic) {
  const auto f = two_clusters(1);
  const auto m = init_encoder(std::vector<std::size_t>{8, 6, 3}, 1);
  TrainConfig cfg;
  cfg.max_iters = 50;
  cfg.seed = 5;
  const auto a = train_encoder(m, truth_pairs(f), f, cfg);
  const auto b = train_encoder(m, truth_pairs(f), f, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  cfg.seed = 6;
  EXPECT_FALSE(train_encoder(m, truth_pairs(f), f, cfg).model == a.model);
}

TEST_F(TrainTest, StopsWhenWindowMeansAgree) {
  // A zero learning rate is not allowed, so use a tiny one: the trace stays flat and the rule fires
  // as soon as two windows exist.
  const auto f = two_clusters(2);
  std::vector<PairLabel> pairs{{0, 1, PairSign::kSimilar}};
  TrainConfig cfg;
  cfg.learning_rate = 1e-12;
  cfg.patience_window = 5;
  cfg.max_iters = 100;
  const auto res = train_encoder(init_encoder(std::vector<std::size_t>{8, 2}, 0), pairs, f, cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 10u);
}

TEST_F(TrainTest, Errors) {
  const auto f = two_clusters(0);
  const auto m = init_encoder(std::vector<std::size_t>{8, 2}, 0);
  TrainConfig cfg;
  EXPECT_THROW(train_encoder(m, {}, f, cfg), std::invalid_argument);
  std::vector<PairLabel> bad{{0, 500, PairSign::kSimilar}};
  EXPECT_THROW(train_encoder(m, bad, f, cfg), std::invalid_argument);
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(WindowedChange, Definition) {
  const std::vector<double> trace{4, 4, 2, 2};
  EXPECT_FALSE(windowed_relative_change(trace, 3).has_value());
  EXPECT_DOUBLE_EQ(*windowed_relative_change(trace, 2), 0.5);
  EXPECT_DOUBLE_EQ(*windowed_relative_change(trace, 1), 0.0);
}

TEST(Standardizer, FoldEqualsStandardizedForward) {
  SyntheticSpec spec;
  spec.dim = 10;
  spec.points_per_cluster = 20;
  const auto f = synth_generate(spec);
  const auto st = fit_standardizer(f);
  const auto m = init_encoder(std::vector<std::size_t>{10, 7, 3}, 4);
  const auto folded = fold_standardizer(m, st);
  EXPECT_TRUE(forward_all(folded, f).isApprox(forward_all(m, standardize(f, st)), 1e-6));
  EXPECT_TRUE(standardize(f, st).has_labels());
}

TEST(Standardizer, ConstantColumnKeepsUnitScale) {
  const FeatureSet f(3, 2, {1, 5, 2, 5, 3, 5});
  const auto st = fit_standardizer(f);
  EXPECT_EQ(st.scale[1], 1.0);
  EXPECT_DOUBLE_EQ(st.mean[1], 5.0);
}

TEST(EtaField, ZeroEmbeddingsGiveOneHalf) {
  const auto eta = EtaField::from_embeddings(Eigen::MatrixXd::Zero(4, 3), 1.0);
  EXPECT_EQ(eta(0, 1), 0.5);
}

TEST(EtaField, SymmetricAndInOpenRange) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.999, 0.999);
  const Eigen::MatrixXd z = Eigen::MatrixXd::NullaryExpr(48, 40, [&] { return u(rng); });
  const auto eta = EtaField::from_embeddings(z, 1.0);
  const auto dense = eta.materialize();
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      ASSERT_EQ(eta(i, j), eta(j, i));
      ASSERT_GT(eta(i, j), sigmoid(-48.0));
      ASSERT_LT(eta(i, j), sigmoid(48.0));
      ASSERT_EQ(dense(i, j), eta(i, j));
    }
  }
}

TEST(EtaField, MatrixValidation) {
  Eigen::MatrixXd m(2, 2);
  m << 0.5, 0.3, 0.4, 0.5;
  EXPECT_THROW(EtaField::from_matrix(m), std::invalid_argument);
  m << 0.5, 1.3, 1.3, 0.5;
  EXPECT_THROW(EtaField::from_matrix(m), std::invalid_argument);
  EXPECT_THROW(EtaField::from_embeddings(Eigen::MatrixXd::Zero(2, 2), 0.0), std::invalid_argument);
}

TEST(EtaField, EstimateUsesScale) {
  const EncoderModel m({{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)}});
  const FeatureSet f(2, 2, {1, 0, 1, 0});
  const double t = std::tanh(1.0);
  EXPECT_NEAR(estimate_eta(m, f, 0.5)(0, 1), sigmoid(0.5 * t * t), 1e-12);
}

TEST(Model, RejectsInconsistentLayers) {
  EXPECT_THROW(EncoderModel(std::vector<DenseLayer>{}), std::invalid_argument);
  EXPECT_THROW(EncoderModel({{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(3)}}), std::invalid_argument);
  EXPECT_THROW(EncoderModel({{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2)},
                             {Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2)}}),
               std::invalid_argument);
}

}  // namespace
}  // namespace dh
