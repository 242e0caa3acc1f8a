#include "distillhash/encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace dh {

EncoderModel::EncoderModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("encoder needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    if (L.weights.rows() == 0 || L.weights.cols() == 0)
      throw std::invalid_argument("encoder layer " + std::to_string(l) + " has an empty dimension");
    if (L.bias.size() != L.weights.rows())
      throw std::invalid_argument("bias length mismatch in layer " + std::to_string(l));
    if (l > 0 && L.weights.cols() != layers_[l - 1].weights.rows())
      throw std::invalid_argument("inconsistent dims between layers " + std::to_string(l - 1) +
                                  " and " + std::to_string(l));
    if (!L.weights.allFinite() || !L.bias.allFinite())
      throw std::invalid_argument("non-finite parameter in layer " + std::to_string(l));
  }
}

std::vector<std::size_t> EncoderModel::layer_dims() const {
  std::vector<std::size_t> dims{input_dim()};
  for (const auto& L : layers_) dims.push_back(static_cast<std::size_t>(L.weights.rows()));
  return dims;
}

std::size_t EncoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& L : layers_) n += static_cast<std::size_t>(L.weights.size() + L.bias.size());
  return n;
}

EncoderModel EncoderModel::rounded_to_storage() const {
  auto layers = layers_;
  for (auto& L : layers) {
    L.weights = L.weights.cast<float>().cast<double>();
    L.bias = L.bias.cast<float>().cast<double>();
  }
  return EncoderModel(std::move(layers));
}

bool operator==(const EncoderModel& a, const EncoderModel& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const auto& x = a.layers_[l];
    const auto& y = b.layers_[l];
    if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols()) return false;
    if (x.weights != y.weights || x.bias != y.bias) return false;
  }
  return true;
}

EncoderModel init_encoder(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) throw std::invalid_argument("init_encoder needs at least 2 dims");
  for (auto d : layer_dims)
    if (d == 0) throw std::invalid_argument("init_encoder: zero layer width");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(layer_dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer L{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) L.weights(r, c) = u(rng);
    layers.push_back(std::move(L));
  }
  return EncoderModel(std::move(layers));
}

namespace {

// Column-batched pass. acts[0] is the input, acts[l+1] the post-activation output of layer l.
void forward_batch(const EncoderModel& model, Eigen::MatrixXd input, std::vector<Eigen::MatrixXd>& acts) {
  const auto& layers = model.layers();
  acts.resize(layers.size() + 1);
  acts[0] = std::move(input);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd pre = layers[l].weights * acts[l];
    pre.colwise() += layers[l].bias;
    if (l + 1 == layers.size()) {
      acts[l + 1] = pre.array().tanh().matrix();
    } else {
      acts[l + 1] = pre.cwiseMax(0.0);
    }
  }
}

template <typename T>
Eigen::VectorXd forward_impl(const EncoderModel& model, std::span<const T> x) {
  if (x.size() != model.input_dim())
    throw std::invalid_argument("forward: input has " + std::to_string(x.size()) + " entries, model expects " +
                                std::to_string(model.input_dim()));
  Eigen::MatrixXd in(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t k = 0; k < x.size(); ++k) in(static_cast<Eigen::Index>(k), 0) = static_cast<double>(x[k]);
  std::vector<Eigen::MatrixXd> acts;
  forward_batch(model, std::move(in), acts);
  return acts.back().col(0);
}

double dot_columns(const Eigen::MatrixXd& z, Eigen::Index a, Eigen::Index b) {
  const double* za = z.col(a).data();
  const double* zb = z.col(b).data();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < z.rows(); ++k) acc += za[k] * zb[k];
  return acc;
}

// Loss of one pair as a function of its logit u.
double pair_loss_from_logit(double u, PairSign s) {
  return s == PairSign::kSimilar ? softplus(-u) : softplus(u);
}

}  // namespace

Eigen::VectorXd forward(const EncoderModel& model, std::span<const double> x) { return forward_impl(model, x); }
Eigen::VectorXd forward(const EncoderModel& model, std::span<const float> x) { return forward_impl(model, x); }

Eigen::MatrixXd forward_all(const EncoderModel& model, const FeatureSet& features) {
  if (features.dim() != model.input_dim())
    throw std::invalid_argument("forward_all: feature dim " + std::to_string(features.dim()) +
                                " does not match model input " + std::to_string(model.input_dim()));
  const auto n = static_cast<Eigen::Index>(features.n_items());
  const auto d = static_cast<Eigen::Index>(features.dim());
  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>> raw(features.data().data(), d, n);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(model.output_dim()), n);
  // Fixed-size column blocks keep every item's arithmetic independent of the thread count.
  constexpr Eigen::Index kBlock = 256;
  const Eigen::Index n_blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index b = 0; b < n_blocks; ++b) {
    const Eigen::Index start = b * kBlock;
    const Eigen::Index width = std::min(kBlock, n - start);
    std::vector<Eigen::MatrixXd> acts;
    forward_batch(model, raw.middleCols(start, width).cast<double>(), acts);
    out.middleCols(start, width) = acts.back();
  }
  return out;
}

double pairwise_logistic_loss(std::span<const double> zi, std::span<const double> zj, PairSign s,
                              double logit_scale) {
  if (zi.size() != zj.size()) throw std::invalid_argument("pairwise_logistic_loss: length mismatch");
  return pair_loss_from_logit(logit_scale * dot(zi, zj), s);
}

double mean_pair_loss(const Eigen::MatrixXd& embeddings, std::span<const PairLabel> pairs, double logit_scale) {
  if (pairs.empty()) throw std::invalid_argument("mean_pair_loss: no pairs");
  double total = 0.0;
  for (const auto& p : pairs) total += pair_loss_from_logit(logit_scale * dot_columns(embeddings, p.i, p.j), p.s);
  return total / static_cast<double>(pairs.size());
}

namespace {

Eigen::MatrixXd stack_batch(const EncoderModel& model, std::span<const PairSample> batch) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto in = static_cast<Eigen::Index>(model.input_dim());
  Eigen::MatrixXd x(in, 2 * B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& s = batch[static_cast<std::size_t>(b)];
    if (s.xi.size() != model.input_dim() || s.xj.size() != model.input_dim())
      throw std::invalid_argument("loss_gradient: sample dimension mismatch");
    x.col(b) = Eigen::Map<const Eigen::VectorXd>(s.xi.data(), in);
    x.col(B + b) = Eigen::Map<const Eigen::VectorXd>(s.xj.data(), in);
  }
  return x;
}

}  // namespace

double batch_loss(const EncoderModel& model, std::span<const PairSample> batch, double logit_scale) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  std::vector<Eigen::MatrixXd> acts;
  forward_batch(model, stack_batch(model, batch), acts);
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::MatrixXd& z = acts.back();
  double total = 0.0;
  for (Eigen::Index b = 0; b < B; ++b)
    total += pair_loss_from_logit(logit_scale * dot_columns(z, b, B + b), batch[static_cast<std::size_t>(b)].s);
  return total / static_cast<double>(B);
}

LossAndGradient loss_gradient(const EncoderModel& model, std::span<const PairSample> batch, double logit_scale) {
  if (batch.empty()) throw std::invalid_argument("loss_gradient: empty batch");
  const auto& layers = model.layers();
  const auto B = static_cast<Eigen::Index>(batch.size());
  std::vector<Eigen::MatrixXd> acts;
  forward_batch(model, stack_batch(model, batch), acts);
  const Eigen::MatrixXd& z = acts.back();

  // dL/du = (sigma(u) - y) / B with y = 1 for similar pairs; u = scale * <z_i, z_j>.
  LossAndGradient out;
  Eigen::MatrixXd delta(z.rows(), 2 * B);
  double total = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const PairSign s = batch[static_cast<std::size_t>(b)].s;
    const double u = logit_scale * dot_columns(z, b, B + b);
    total += pair_loss_from_logit(u, s);
    const double y = s == PairSign::kSimilar ? 1.0 : 0.0;
    const double du = logit_scale * (sigmoid(u) - y) / static_cast<double>(B);
    delta.col(b) = du * z.col(B + b);
    delta.col(B + b) = du * z.col(b);
  }
  out.loss = total / static_cast<double>(B);

  out.grad.resize(layers.size());
  // Through tanh, then back through the affine/rectifier stack.
  delta.array() *= (1.0 - z.array().square());
  for (std::size_t l = layers.size(); l-- > 0;) {
    out.grad[l].weights = delta * acts[l].transpose();
    out.grad[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
      delta = (acts[l].array() > 0.0).select(back, 0.0);
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (patience_window == 0) throw std::invalid_argument("patience_window must be >= 1");
  if (!(logit_scale > 0.0)) throw std::invalid_argument("logit_scale must be > 0");
}

std::optional<double> windowed_relative_change(std::span<const double> trace, std::size_t window) {
  if (window == 0 || trace.size() < 2 * window) return std::nullopt;
  double prev = 0.0, cur = 0.0;
  const std::size_t n = trace.size();
  for (std::size_t k = n - 2 * window; k < n - window; ++k) prev += trace[k];
  for (std::size_t k = n - window; k < n; ++k) cur += trace[k];
  prev /= static_cast<double>(window);
  cur /= static_cast<double>(window);
  const double denom = std::max(std::abs(prev), 1e-300);
  return std::abs(prev - cur) / denom;
}

TrainResult train_encoder(const EncoderModel& model, std::span<const PairLabel> pairs, const FeatureSet& features,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw std::invalid_argument("no training pairs");
  if (features.dim() != model.input_dim())
    throw std::invalid_argument("train_encoder: feature dim does not match model input");
  for (const auto& p : pairs) {
    if (p.i >= features.n_items() || p.j >= features.n_items())
      throw std::invalid_argument("train_encoder: pair index out of range");
  }

  TrainResult result;
  result.model = model;
  if (cfg.max_iters == 0) return result;

  // Inputs promoted once; samples reference these rows.
  const std::size_t d = features.dim();
  std::vector<double> inputs(features.data().begin(), features.data().end());
  auto row = [&](std::size_t i) { return std::span<const double>(inputs.data() + i * d, d); };

  auto& layers = result.model.mutable_layers();
  std::vector<DenseLayer> velocity;
  for (const auto& L : layers)
    velocity.push_back({Eigen::MatrixXd::Zero(L.weights.rows(), L.weights.cols()),
                        Eigen::VectorXd::Zero(L.bias.size())});

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::vector<PairSample> batch(cfg.batch_size);
  result.loss_trace.reserve(cfg.max_iters);

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    for (auto& s : batch) {
      const auto& p = pairs[pick(rng)];
      s = {row(p.i), row(p.j), p.s};
    }
    auto lg = loss_gradient(result.model, batch, cfg.logit_scale);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      velocity[l].weights = cfg.momentum * velocity[l].weights - cfg.learning_rate * lg.grad[l].weights;
      velocity[l].bias = cfg.momentum * velocity[l].bias - cfg.learning_rate * lg.grad[l].bias;
      layers[l].weights += velocity[l].weights;
      layers[l].bias += velocity[l].bias;
    }
    result.loss_trace.push_back(lg.loss);
    result.iterations = it + 1;
    auto change = windowed_relative_change(result.loss_trace, cfg.patience_window);
    if (change && *change < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

InputStandardizer fit_standardizer(const FeatureSet& features) {
  const std::size_t n = features.n_items();
  const std::size_t d = features.dim();
  InputStandardizer st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    auto r = features.row(i);
    for (std::size_t k = 0; k < d; ++k) st.mean[k] += r[k];
  }
  for (auto& m : st.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = features.row(i);
    for (std::size_t k = 0; k < d; ++k) st.scale[k] += (r[k] - st.mean[k]) * (r[k] - st.mean[k]);
  }
  for (auto& s : st.scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  return st;
}

FeatureSet standardize(const FeatureSet& features, const InputStandardizer& st) {
  const std::size_t d = features.dim();
  if (st.mean.size() != d || st.scale.size() != d)
    throw std::invalid_argument("standardizer dimension mismatch");
  std::vector<float> out(features.data().size());
  for (std::size_t i = 0; i < features.n_items(); ++i) {
    auto r = features.row(i);
    for (std::size_t k = 0; k < d; ++k)
      out[i * d + k] = static_cast<float>((r[k] - st.mean[k]) / st.scale[k]);
  }
  return {features.n_items(), d, std::move(out), features.maybe_labels()};
}

EncoderModel fold_standardizer(const EncoderModel& model, const InputStandardizer& st) {
  const auto d = static_cast<Eigen::Index>(model.input_dim());
  if (static_cast<Eigen::Index>(st.mean.size()) != d || static_cast<Eigen::Index>(st.scale.size()) != d)
    throw std::invalid_argument("standardizer dimension mismatch");
  auto layers = model.layers();
  auto& first = layers.front();
  const Eigen::Map<const Eigen::VectorXd> mean(st.mean.data(), d);
  const Eigen::Map<const Eigen::VectorXd> scale(st.scale.data(), d);
  // W (x - mu) / s + b  =  (W diag(1/s)) x + (b - W diag(1/s) mu)
  first.weights = first.weights * scale.cwiseInverse().asDiagonal();
  first.bias -= first.weights * mean;
  return EncoderModel(std::move(layers));
}

EtaField EtaField::from_embeddings(Eigen::MatrixXd embeddings, double logit_scale) {
  if (!(logit_scale > 0.0)) throw std::invalid_argument("logit_scale must be > 0");
  EtaField f;
  f.n_items_ = static_cast<std::size_t>(embeddings.cols());
  f.logit_scale_ = logit_scale;
  f.embeddings_ = std::move(embeddings);
  return f;
}

EtaField EtaField::from_matrix(Eigen::MatrixXd eta) {
  if (eta.rows() != eta.cols()) throw std::invalid_argument("eta matrix must be square");
  if (eta != eta.transpose()) throw std::invalid_argument("eta matrix must be symmetric");
  if ((eta.array() < 0.0).any() || (eta.array() > 1.0).any())
    throw std::invalid_argument("eta values must lie in [0, 1]");
  EtaField f;
  f.n_items_ = static_cast<std::size_t>(eta.rows());
  f.dense_ = std::move(eta);
  f.dense_backed_ = true;
  return f;
}

double EtaField::operator()(std::size_t i, std::size_t j) const {
  if (dense_backed_) return dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return sigmoid(logit_scale_ *
                 dot_columns(embeddings_, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
}

Eigen::MatrixXd EtaField::materialize() const {
  if (dense_backed_) return dense_;
  const auto n = static_cast<Eigen::Index>(n_items_);
  Eigen::MatrixXd m(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = (*this)(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return m;
}

EtaField estimate_eta(const EncoderModel& model, const FeatureSet& features, double logit_scale) {
  return EtaField::from_embeddings(forward_all(model, features), logit_scale);
}

}  // namespace dh
