#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "distillhash/core_math.hpp"

namespace dh {

/// out x in weights plus an out-length bias.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Feed-forward encoder: affine layers, rectifier on hidden layers, tanh on the output layer.
class EncoderModel {
 public:
  EncoderModel() = default;
  explicit EncoderModel(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().weights.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(layers_.back().weights.rows()); }
  std::vector<std::size_t> layer_dims() const;
  std::size_t parameter_count() const;

  /// Parameters rounded through 32-bit floats, i.e. exactly what a checkpoint stores.
  EncoderModel rounded_to_storage() const;

  friend bool operator==(const EncoderModel& a, const EncoderModel& b);

 private:
  std::vector<DenseLayer> layers_;
};

/// Glorot-uniform weights, zero biases, deterministic in seed.
EncoderModel init_encoder(std::span<const std::size_t> layer_dims, std::uint64_t seed);

Eigen::VectorXd forward(const EncoderModel& model, std::span<const double> x);
Eigen::VectorXd forward(const EncoderModel& model, std::span<const float> x);

/// Encodes every item; result is output_dim x n_items, column i = forward(row i).
Eigen::MatrixXd forward_all(const EncoderModel& model, const FeatureSet& features);

/// -log sigma(scale*<zi,zj>) for s = +1, -log(1 - sigma(scale*<zi,zj>)) for s = -1.
double pairwise_logistic_loss(std::span<const double> zi, std::span<const double> zj, PairSign s,
                              double logit_scale = 1.0);

/// Mean pairwise loss over a set of pairs given cached embeddings (output_dim x n_items).
double mean_pair_loss(const Eigen::MatrixXd& embeddings, std::span<const PairLabel> pairs,
                      double logit_scale = 1.0);

struct PairSample {
  std::span<const double> xi;
  std::span<const double> xj;
  PairSign s;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<DenseLayer> grad;  // same shapes as the model
};

/// Mean batch loss and its exact gradient by reverse-mode differentiation through both
/// encoder passes; the two branches share parameters so their contributions add.
LossAndGradient loss_gradient(const EncoderModel& model, std::span<const PairSample> batch,
                              double logit_scale = 1.0);

/// Mean batch loss only.
double batch_loss(const EncoderModel& model, std::span<const PairSample> batch, double logit_scale = 1.0);

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t max_iters = 1000;
  double tol = 1e-4;
  std::size_t patience_window = 50;
  std::uint64_t seed = 0;
  double logit_scale = 1.0;

  void validate() const;
};

struct TrainResult {
  EncoderModel model;
  std::vector<double> loss_trace;  // minibatch loss before each update
  bool converged = false;          // stop rule fired before max_iters
  std::size_t iterations = 0;
};

/// Relative change between the mean loss of the last window and the window before it.
/// Empty until two full windows exist.
std::optional<double> windowed_relative_change(std::span<const double> trace, std::size_t window);

/// SGD with classical momentum on minibatches of pairs drawn uniformly with replacement.
/// Stops after max_iters or once windowed_relative_change drops below tol.
TrainResult train_encoder(const EncoderModel& model, std::span<const PairLabel> pairs,
                          const FeatureSet& features, const TrainConfig& cfg);

/// Per-coordinate z-scoring of encoder inputs. Zero-variance coordinates keep scale 1.
struct InputStandardizer {
  std::vector<double> mean;
  std::vector<double> scale;
};

InputStandardizer fit_standardizer(const FeatureSet& features);
FeatureSet standardize(const FeatureSet& features, const InputStandardizer& st);

/// Rewrites the first layer so that the model applied to raw inputs equals the given model
/// applied to standardized inputs.
EncoderModel fold_standardizer(const EncoderModel& model, const InputStandardizer& st);

/// Estimated noisy-label posterior eta(i,j) = sigma(scale * <z_i, z_j>).
///
/// Backed either by cached embeddings or by an explicit symmetric matrix (the latter is used
/// for planted instances in tests). Evaluation is symmetric bit for bit.
class EtaField {
 public:
  static EtaField from_embeddings(Eigen::MatrixXd embeddings, double logit_scale);
  static EtaField from_matrix(Eigen::MatrixXd eta);

  std::size_t n_items() const { return n_items_; }
  double operator()(std::size_t i, std::size_t j) const;

  /// Dense n x n matrix of all values (diagonal included).
  Eigen::MatrixXd materialize() const;

 private:
  std::size_t n_items_ = 0;
  double logit_scale_ = 1.0;
  Eigen::MatrixXd embeddings_;  // p x n, when embedding-backed
  Eigen::MatrixXd dense_;       // n x n, when matrix-backed
  bool dense_backed_ = false;
};

EtaField estimate_eta(const EncoderModel& model, const FeatureSet& features, double logit_scale = 1.0);

}  // namespace dh
