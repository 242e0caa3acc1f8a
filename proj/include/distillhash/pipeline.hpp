#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "distillhash/distillation.hpp"
#include "distillhash/encoder.hpp"
#include "distillhash/evaluation.hpp"
#include "distillhash/noisy_labels.hpp"
#include "distillhash/synth.hpp"

namespace dh {

/// Invalid configuration key or value (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distillation produced no pairs (CLI exit code 3). The message carries the diagnostic.
class EmptyDistilledSet : public std::runtime_error {
 public:
  EmptyDistilledSet(const std::string& what, nlohmann::json diagnostic)
      : std::runtime_error(what), diagnostic_(std::move(diagnostic)) {}
  const nlohmann::json& diagnostic() const { return diagnostic_; }

 private:
  nlohmann::json diagnostic_;
};

/// Which pairs the hash encoder is trained on.
enum class Variant {
  kDistilled,  // the full pipeline
  kNoisy,      // ablation: hash training straight on the thresholded pairs
};

/// Every file the pipeline reads or writes. Empty entries resolve to defaults in work_dir.
enum class Artifact {
  kFeatures,
  kLabels,
  kQueryFeatures,
  kQueryLabels,
  kThresholds,
  kNoisyPairs,
  kNoisyReport,
  kEtaModel,
  kEtaTrace,
  kDistilledPairs,
  kDistillReport,
  kHashModel,
  kHashTrace,
  kCodes,
  kQueryCodes,
  kReport,
  kStageLog,
};

struct PipelineConfig {
  std::size_t o = 4;
  std::size_t p = 48;
  std::size_t K = 16;
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t sample_budget = 2'000'000;
  std::vector<std::size_t> hidden{512, 256};
  /// Scale on the eta logit <z_i, z_j>. Unscaled by default; nullopt ("auto") means 1/sqrt(p).
  std::optional<double> eta_logit_scale = 1.0;
  bool standardize_inputs = true;
  TrainConfig train;  // batch 64, lr 1e-3, momentum 0.9, 1000 iterations
  double pair_subsample = 1.0;
  std::size_t topN = 1000;
  std::size_t R = 0;
  std::uint64_t seed = 0;
  std::filesystem::path work_dir = "distillhash_run";
  std::map<Artifact, std::filesystem::path> paths;

  void validate() const;
  double resolved_eta_logit_scale() const;
  std::filesystem::path path(Artifact a, Variant v = Variant::kDistilled) const;
};

/// Names accepted by apply_setting, in a stable order (used to register CLI flags).
const std::vector<std::string>& config_keys();

/// Applies one key=value setting. Throws ConfigError on unknown keys or malformed values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value file; blank lines and lines starting with '#' are ignored.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

/// Text ingestion: one item per line, values separated by commas and/or whitespace.
FeatureSet parse_feature_text(const std::string& text);
/// One multi-hot row of 0/1 values per line.
LabelMatrix parse_label_text(const std::string& text);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const ThresholdEstimate& est);
nlohmann::json to_json(const AssumptionReport& rep);
nlohmann::json to_json(const DistillStats& stats);
nlohmann::json trace_to_json(std::span<const double> trace);
ThresholdPair thresholds_from_json(const nlohmann::json& j);

/// Features plus labels when the label file exists.
FeatureSet load_feature_set(const std::filesystem::path& features, const std::filesystem::path& labels);

struct TrainSummary {
  std::size_t pairs = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct DistillSummary {
  DistillStats stats;
  std::optional<double> distilled_fidelity;  // when labels are available
  std::optional<double> noisy_fidelity;
};

// Individual stages. Each reads its inputs from and writes its outputs to cfg's artifact paths,
// so running them one by one is equivalent to run_pipeline.
void stage_synth(const PipelineConfig& cfg, const SyntheticSpec& spec, std::size_t queries_per_cluster);
ThresholdEstimate stage_thresholds(const PipelineConfig& cfg);
AssumptionReport stage_noisy_labels(const PipelineConfig& cfg);  // report empty when unlabeled
TrainSummary stage_train_eta(const PipelineConfig& cfg);
DistillSummary stage_distill(const PipelineConfig& cfg);
TrainSummary stage_train_hash(const PipelineConfig& cfg, Variant variant);
void stage_encode(const PipelineConfig& cfg, Variant variant);
std::optional<EvalReport> stage_evaluate(const PipelineConfig& cfg, Variant variant);

struct PipelineResult {
  std::vector<std::string> stages;
  std::optional<EvalReport> report;
  std::optional<DistillSummary> distill;
  TrainSummary eta_training;
  TrainSummary hash_training;
  nlohmann::json stage_log;
};

/// thresholds -> noisy-labels -> train-eta -> distill -> train-hash -> encode -> evaluate.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Same stages minus distill; hash training consumes the noisy pairs. Outputs go to the
/// "_star" variants of the hash artifacts.
PipelineResult run_variant_star(const PipelineConfig& cfg);

}  // namespace dh
