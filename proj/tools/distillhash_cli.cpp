// distillhash: command-line driver for the hashing pipeline and its individual stages.
#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "distillhash/io.hpp"
#include "distillhash/pipeline.hpp"

namespace {

using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitEmptyDistilled = 3;
constexpr int kExitIo = 4;

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

json summary_json(const dh::TrainSummary& s) {
  return {{"pairs", s.pairs},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"initial_loss", s.initial_loss},
          {"final_loss", s.final_loss}};
}

json result_json(const dh::PipelineResult& r) {
  json out{{"stages", r.stages}, {"hash_training", summary_json(r.hash_training)}};
  if (r.distill) {
    out["eta_training"] = summary_json(r.eta_training);
    out["distill"] = dh::to_json(r.distill->stats);
  }
  if (r.report) out["map"] = r.report->map;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised deep hashing with distilled pair labels"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_file;
  app.add_option("--config", config_file, "Flat key=value config file (flags override it)")->check(CLI::ExistingFile);

  std::map<std::string, std::string> overrides;
  for (const auto& key : dh::config_keys()) {
    app.add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; }, "PipelineConfig." + key)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  dh::SyntheticSpec spec;
  std::size_t queries_per_cluster = 0;
  auto* synth = app.add_subcommand("synth", "Generate a clustered synthetic dataset with planted labels");
  synth->add_option("--clusters", spec.n_clusters, "Number of clusters")->capture_default_str();
  synth->add_option("--points-per-cluster", spec.points_per_cluster, "Points per cluster")->capture_default_str();
  synth->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str();
  synth->add_option("--noise-sigma", spec.noise_sigma, "Per-coordinate noise std")->capture_default_str();
  synth->add_option("--queries-per-cluster", queries_per_cluster, "Held-out query points per cluster")
      ->capture_default_str();

  std::string features_text, labels_text, query_features_text, query_labels_text;
  auto* ingest = app.add_subcommand("ingest", "Convert text features/labels into binary files");
  ingest->add_option("--features-text", features_text, "One item per line")->required()->check(CLI::ExistingFile);
  ingest->add_option("--labels-text", labels_text, "One 0/1 row per line")->check(CLI::ExistingFile);
  ingest->add_option("--query-features-text", query_features_text)->check(CLI::ExistingFile);
  ingest->add_option("--query-labels-text", query_labels_text)->check(CLI::ExistingFile);

  auto* thresholds = app.add_subcommand("thresholds", "Estimate the distance thresholds");
  auto* noisy = app.add_subcommand("noisy-labels", "Build thresholded noisy pair labels");
  auto* train_eta = app.add_subcommand("train-eta", "Train the posterior encoder on the noisy pairs");
  auto* distill = app.add_subcommand("distill", "Select confident pairs");
  auto* train_hash = app.add_subcommand("train-hash", "Train the hash encoder");
  auto* encode = app.add_subcommand("encode", "Encode database and query items");
  auto* evaluate = app.add_subcommand("evaluate", "Compute MAP, topN precision and the PR curve");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
  auto* pipeline_star = app.add_subcommand("pipeline-star", "Run every stage except distillation");

  bool noisy_variant = false;
  for (auto* sub : {train_hash, encode, evaluate})
    sub->add_flag("--star", noisy_variant, "Use the noisy-pair (star) variant artifacts");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    dh::PipelineConfig cfg;
    if (!config_file.empty()) {
      for (const auto& [k, v] : dh::parse_config_text(dh::io::read_text(config_file))) dh::apply_setting(cfg, k, v);
    }
    for (const auto& [k, v] : overrides) dh::apply_setting(cfg, k, v);
    cfg.validate();
    const auto variant = noisy_variant ? dh::Variant::kNoisy : dh::Variant::kDistilled;

    if (*synth) {
      spec.seed = cfg.seed;
      spec.validate();
      dh::stage_synth(cfg, spec, queries_per_cluster);
      print({{"features", cfg.path(dh::Artifact::kFeatures).string()},
             {"items", spec.n_clusters * spec.points_per_cluster}});
    } else if (*ingest) {
      auto write_set = [&](const std::string& ftext, const std::string& ltext, dh::Artifact fa, dh::Artifact la) {
        try {
          dh::FeatureSet fs = dh::parse_feature_text(dh::io::read_text(ftext));
          std::optional<dh::LabelMatrix> labels;
          if (!ltext.empty()) {
            labels = dh::parse_label_text(dh::io::read_text(ltext));
            (void)fs.with_labels(*labels);  // validates row count and nonempty rows
          }
          dh::io::write_features(cfg.path(fa), fs);
          if (labels) dh::io::write_labels(cfg.path(la), *labels);
          return fs.n_items();
        } catch (const std::invalid_argument& e) {
          throw dh::io::IoError(ftext + ": " + e.what());
        }
      };
      json out{{"items", write_set(features_text, labels_text, dh::Artifact::kFeatures, dh::Artifact::kLabels)}};
      if (!query_features_text.empty())
        out["queries"] =
            write_set(query_features_text, query_labels_text, dh::Artifact::kQueryFeatures, dh::Artifact::kQueryLabels);
      print(out);
    } else if (*thresholds) {
      print(dh::to_json(dh::stage_thresholds(cfg)));
    } else if (*noisy) {
      dh::stage_noisy_labels(cfg);
      print(json::parse(dh::io::read_text(cfg.path(dh::Artifact::kNoisyReport))));
    } else if (*train_eta) {
      print(summary_json(dh::stage_train_eta(cfg)));
    } else if (*distill) {
      const auto s = dh::stage_distill(cfg);
      print(dh::to_json(s.stats));
    } else if (*train_hash) {
      print(summary_json(dh::stage_train_hash(cfg, variant)));
    } else if (*encode) {
      dh::stage_encode(cfg, variant);
      print({{"codes", cfg.path(dh::Artifact::kCodes, variant).string()}});
    } else if (*evaluate) {
      const auto rep = dh::stage_evaluate(cfg, variant);
      if (!rep) throw dh::io::IoError("no database labels at " + cfg.path(dh::Artifact::kLabels).string());
      print({{"map", rep->map}, {"report", cfg.path(dh::Artifact::kReport, variant).string()}});
    } else if (*pipeline) {
      print(result_json(dh::run_pipeline(cfg)));
    } else if (*pipeline_star) {
      print(result_json(dh::run_variant_star(cfg)));
    }
  } catch (const dh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dh::EmptyDistilledSet& e) {
    std::cerr << "error: " << e.what() << "\n" << e.diagnostic().dump(2) << "\n";
    return kExitEmptyDistilled;
  } catch (const dh::io::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const dh::io::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
