#include "distillhash/synth.hpp"

#include <Eigen/Dense>

#include <random>
#include <stdexcept>

#include "distillhash/seeds.hpp"

namespace dh {

void SyntheticSpec::validate() const {
  if (n_clusters < 1) throw std::invalid_argument("n_clusters must be >= 1");
  if (points_per_cluster < 1) throw std::invalid_argument("points_per_cluster must be >= 1");
  if (dim < n_clusters) throw std::invalid_argument("dim must be >= n_clusters for orthonormal centers");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
}

namespace {

Eigen::MatrixXd orthonormal_centers(const SyntheticSpec& spec) {
  std::mt19937_64 rng(derive_seed(spec.seed, "synth/centers"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(spec.dim), static_cast<Eigen::Index>(spec.n_clusters));
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

FeatureSet sample_points(const SyntheticSpec& spec, std::size_t per_cluster, std::string_view stream) {
  const Eigen::MatrixXd centers = orthonormal_centers(spec);
  const std::size_t n = per_cluster * spec.n_clusters;
  if (n < 2) throw std::invalid_argument("synthetic set needs at least 2 points");
  std::mt19937_64 rng(derive_seed(spec.seed, stream));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<float> features(n * spec.dim);
  std::vector<std::size_t> classes(n);
  std::vector<double> x(spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % spec.n_clusters;
    classes[i] = c;
    double nn = 0.0;
    for (std::size_t k = 0; k < spec.dim; ++k) {
      x[k] = centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) + spec.noise_sigma * gauss(rng);
      nn += x[k] * x[k];
    }
    const double inv = 1.0 / std::sqrt(nn);
    for (std::size_t k = 0; k < spec.dim; ++k) features[i * spec.dim + k] = static_cast<float>(x[k] * inv);
  }
  return {n, spec.dim, std::move(features), LabelMatrix::from_classes(classes, spec.n_clusters)};
}

}  // namespace

FeatureSet synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  return sample_points(spec, spec.points_per_cluster, "synth/points");
}

FeatureSet synth_generate_queries(const SyntheticSpec& spec, std::size_t queries_per_cluster) {
  spec.validate();
  if (queries_per_cluster < 1) throw std::invalid_argument("queries_per_cluster must be >= 1");
  return sample_points(spec, queries_per_cluster, "synth/queries");
}

}  // namespace dh
