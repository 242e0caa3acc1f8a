#include "distillhash/pipeline.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "distillhash/io.hpp"

namespace dh {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const SyntheticSpec kSpec{3, 30, 16, 0.3, 0};

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("dh_pipe_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  PipelineConfig small_config(const std::string& name) const {
    PipelineConfig cfg;
    cfg.work_dir = root_ / name;
    cfg.hidden = {32, 16};
    cfg.p = 12;
    cfg.K = 8;
    cfg.train.max_iters = 120;
    cfg.train.batch_size = 32;
    cfg.topN = 50;
    return cfg;
  }

  static std::string cli_flags(const PipelineConfig& cfg) {
    return " --work_dir " + cfg.work_dir.string() + " --hidden 32,16 --p 12 --K 8 --max_iters 120 --batch_size 32 --topN 50";
  }

  static int cli(const std::string& args) {
    const std::string cmd = std::string(DISTILLHASH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path root_;
};

TEST_F(PipelineTest, ConfigDefaults) {
  PipelineConfig cfg;
  EXPECT_EQ(cfg.o, 4u);
  EXPECT_EQ(cfg.p, 48u);
  EXPECT_EQ(cfg.train.batch_size, 64u);
  EXPECT_EQ(cfg.train.learning_rate, 1e-3);
  EXPECT_EQ(cfg.train.momentum, 0.9);
  EXPECT_EQ(cfg.train.max_iters, 1000u);
  EXPECT_EQ(cfg.alpha, 1.0);
  EXPECT_EQ(cfg.beta, 1.0);
  EXPECT_EQ(cfg.resolved_eta_logit_scale(), 1.0);
  dh::apply_setting(cfg, "eta_logit_scale", "auto");
  EXPECT_DOUBLE_EQ(cfg.resolved_eta_logit_scale(), 1.0 / std::sqrt(48.0));
  EXPECT_NO_THROW(cfg.validate());
}

TEST_F(PipelineTest, SettingsAndConfigText) {
  PipelineConfig cfg;
  for (const auto& [k, v] : parse_config_text("# comment\n o = 6\nhidden=64, 32\n\nlearning_rate=0.01\nlabels = x.dhl\n"))
    apply_setting(cfg, k, v);
  EXPECT_EQ(cfg.o, 6u);
  EXPECT_EQ(cfg.hidden, (std::vector<std::size_t>{64, 32}));
  EXPECT_EQ(cfg.train.learning_rate, 0.01);
  EXPECT_EQ(cfg.path(Artifact::kLabels), fs::path("x.dhl"));
  EXPECT_THROW(apply_setting(cfg, "nope", "1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "o", "-1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "alpha", "1.5x"), ConfigError);
  EXPECT_THROW(parse_config_text("o 4\n"), ConfigError);
  apply_setting(cfg, "momentum", "1.0");
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST_F(PipelineTest, StarArtifactsAreSeparate) {
  const PipelineConfig cfg = small_config("x");
  EXPECT_EQ(cfg.path(Artifact::kCodes, Variant::kNoisy).filename(), "codes_star.dhc");
  EXPECT_EQ(cfg.path(Artifact::kNoisyPairs, Variant::kNoisy), cfg.path(Artifact::kNoisyPairs));
}

TEST_F(PipelineTest, TextIngestion) {
  const auto f = parse_feature_text("1.0, 2.0 3\n# skipped\n\n4 5 6\n");
  EXPECT_EQ(f.n_items(), 2u);
  EXPECT_EQ(f.dim(), 3u);
  EXPECT_EQ(f.row(1)[2], 6.0f);
  EXPECT_THROW(parse_feature_text("1 2\n3\n"), std::invalid_argument);
  EXPECT_THROW(parse_feature_text("1 2\n3 x\n"), std::invalid_argument);
  const auto l = parse_label_text("1 0\n0 1\n");
  EXPECT_EQ(l.n_items(), 2u);
  EXPECT_THROW(parse_label_text("1 2\n"), std::invalid_argument);
}

TEST_F(PipelineTest, EndToEndWritesEveryArtifact) {
  const auto cfg = small_config("run");
  stage_synth(cfg, kSpec, 5);
  const auto r = run_pipeline(cfg);
  ASSERT_TRUE(r.report.has_value());
  ASSERT_TRUE(r.distill.has_value());
  EXPECT_GT(r.distill->stats.distilled_pos + r.distill->stats.distilled_neg, 0u);
  EXPECT_EQ(r.stages, (std::vector<std::string>{"thresholds", "noisy-labels", "train-eta", "distill", "train-hash",
                                                "encode", "evaluate"}));
  const auto codes = io::read_codes(cfg.path(Artifact::kCodes));
  EXPECT_EQ(codes.n_items(), 90u);
  EXPECT_EQ(codes.code_len(), 8u);
  EXPECT_EQ(io::read_codes(cfg.path(Artifact::kQueryCodes)).n_items(), 15u);
  EXPECT_EQ(io::read_model(cfg.path(Artifact::kEtaModel)).output_dim(), 12u);
  EXPECT_EQ(io::read_model(cfg.path(Artifact::kHashModel)).layer_dims(), (std::vector<std::size_t>{16, 32, 16, 8}));
  EXPECT_FALSE(io::read_pairs(cfg.path(Artifact::kNoisyPairs)).empty());
  EXPECT_FALSE(io::read_pairs(cfg.path(Artifact::kDistilledPairs)).empty());

  const auto thr = thresholds_from_json(json::parse(io::read_text(cfg.path(Artifact::kThresholds))));
  EXPECT_LE(thr.t1, thr.t2);
  const auto trace = json::parse(io::read_text(cfg.path(Artifact::kEtaTrace)));
  ASSERT_EQ(trace.size(), 120u);
  EXPECT_EQ(trace[0]["iter"], 0);
  EXPECT_TRUE(trace[0]["loss"].is_number());

  // Report schema.
  const auto rep = json::parse(io::read_text(cfg.path(Artifact::kReport)));
  EXPECT_TRUE(rep["map"].is_number());
  ASSERT_TRUE(rep["topn_precision"].is_array());
  for (const auto& e : rep["topn_precision"]) {
    ASSERT_EQ(e.size(), 2u);
    EXPECT_TRUE(e[0].is_number_unsigned());
    EXPECT_TRUE(e[1].is_number());
  }
  EXPECT_EQ(rep["topn_precision"].back()[0], 50);
  ASSERT_EQ(rep["pr_curve"].size(), 9u);
  for (const auto& e : rep["pr_curve"]) {
    ASSERT_EQ(e.size(), 3u);
    EXPECT_TRUE(e[1].is_number() || e[1].is_null());
  }
  EXPECT_DOUBLE_EQ(rep["map"].get<double>(), r.report->map);

  const auto log = json::parse(io::read_text(cfg.path(Artifact::kStageLog)));
  EXPECT_EQ(log["stages"].size(), 7u);
  const auto noisy = json::parse(io::read_text(cfg.path(Artifact::kNoisyReport)));
  EXPECT_TRUE(noisy["assumption"]["holds"].get<bool>());
}

TEST_F(PipelineTest, DeterministicAcrossRuns) {
  const auto a = small_config("a"), b = small_config("b");
  stage_synth(a, kSpec, 5);
  stage_synth(b, kSpec, 5);
  run_pipeline(a);
  run_pipeline(b);
  for (auto art : {Artifact::kCodes, Artifact::kQueryCodes, Artifact::kReport, Artifact::kDistilledPairs,
                   Artifact::kHashModel, Artifact::kDistillReport})
    EXPECT_EQ(io::read_bytes(a.path(art)), io::read_bytes(b.path(art)));
  auto c = small_config("c");
  c.seed = 1;
  stage_synth(c, kSpec, 5);
  run_pipeline(c);
  EXPECT_NE(io::read_bytes(a.path(Artifact::kHashModel)), io::read_bytes(c.path(Artifact::kHashModel)));
}

TEST_F(PipelineTest, StarVariantSkipsDistillation) {
  const auto cfg = small_config("star");
  stage_synth(cfg, kSpec, 5);
  const auto r = run_variant_star(cfg);
  EXPECT_EQ(std::count(r.stages.begin(), r.stages.end(), "distill"), 0);
  EXPECT_EQ(std::count(r.stages.begin(), r.stages.end(), "train-eta"), 0);
  EXPECT_TRUE(fs::exists(cfg.path(Artifact::kCodes, Variant::kNoisy)));
  EXPECT_FALSE(fs::exists(cfg.path(Artifact::kDistilledPairs)));
  EXPECT_FALSE(fs::exists(cfg.path(Artifact::kCodes)));
  const auto log = json::parse(io::read_text(cfg.path(Artifact::kStageLog, Variant::kNoisy)));
  for (const auto& s : log["stages"]) EXPECT_NE(s["stage"], "distill");
  EXPECT_EQ(r.hash_training.pairs, io::read_pairs(cfg.path(Artifact::kNoisyPairs)).size());
}

TEST_F(PipelineTest, ZeroIterationsStillCompletes) {
  auto cfg = small_config("zero");
  cfg.train.max_iters = 0;
  cfg.eta_logit_scale = 4.0;  // random-init embeddings still spread eta enough to distill
  stage_synth(cfg, kSpec, 0);
  const auto r = run_pipeline(cfg);
  EXPECT_EQ(r.hash_training.iterations, 0u);
  EXPECT_EQ(io::read_codes(cfg.path(Artifact::kCodes)).n_items(), 90u);
  ASSERT_TRUE(r.report.has_value());
}

TEST_F(PipelineTest, EmptyDistilledSetAbortsBeforeHashTraining) {
  auto cfg = small_config("empty");
  cfg.train.max_iters = 0;
  cfg.eta_logit_scale = 1e-9;  // eta is 1/2 everywhere
  stage_synth(cfg, kSpec, 0);
  try {
    run_pipeline(cfg);
    FAIL() << "expected EmptyDistilledSet";
  } catch (const EmptyDistilledSet& e) {
    EXPECT_EQ(e.diagnostic()["distilled_pos"], 0);
    EXPECT_EQ(e.diagnostic()["eta_histogram"].size(), 10u);
  }
  EXPECT_FALSE(fs::exists(cfg.path(Artifact::kHashModel)));
  const auto log = json::parse(io::read_text(cfg.path(Artifact::kStageLog)));
  EXPECT_EQ(log["stages"].back()["stage"], "distill");
}

TEST_F(PipelineTest, CliStagesComposeToPipeline) {
  const auto whole = small_config("whole");
  const auto staged = small_config("staged");
  stage_synth(whole, kSpec, 5);
  run_pipeline(whole);

  const std::string flags = cli_flags(staged);
  ASSERT_EQ(cli("synth --points-per-cluster 30 --dim 16 --noise-sigma 0.3 --queries-per-cluster 5" + flags), 0);
  for (const char* stage : {"thresholds", "noisy-labels", "train-eta", "distill", "train-hash", "encode", "evaluate"})
    ASSERT_EQ(cli(std::string(stage) + flags), 0) << stage;
  for (auto art : {Artifact::kFeatures, Artifact::kThresholds, Artifact::kNoisyPairs, Artifact::kEtaModel,
                   Artifact::kDistilledPairs, Artifact::kHashModel, Artifact::kCodes, Artifact::kQueryCodes,
                   Artifact::kReport})
    EXPECT_EQ(io::read_bytes(whole.path(art)), io::read_bytes(staged.path(art))) << whole.path(art);
}

TEST_F(PipelineTest, CliStarStagesComposeToStarPipeline) {
  const auto whole = small_config("whole");
  const auto staged = small_config("staged");
  stage_synth(whole, kSpec, 5);
  run_variant_star(whole);
  const std::string flags = cli_flags(staged);
  ASSERT_EQ(cli("synth --points-per-cluster 30 --dim 16 --noise-sigma 0.3 --queries-per-cluster 5" + flags), 0);
  for (const char* stage : {"thresholds", "noisy-labels", "train-hash --star", "encode --star", "evaluate --star"})
    ASSERT_EQ(cli(std::string(stage) + flags), 0) << stage;
  EXPECT_EQ(io::read_bytes(whole.path(Artifact::kCodes, Variant::kNoisy)),
            io::read_bytes(staged.path(Artifact::kCodes, Variant::kNoisy)));
}

TEST_F(PipelineTest, CliExitCodes) {
  const auto cfg = small_config("cli");
  const std::string flags = cli_flags(cfg);
  EXPECT_EQ(cli("thresholds" + flags + " --K notanumber"), 2);
  EXPECT_EQ(cli("thresholds --pair_subsample 0" + flags), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("thresholds" + flags), 4);  // no features yet

  ASSERT_EQ(cli("synth --points-per-cluster 30 --dim 16" + flags), 0);
  EXPECT_EQ(cli("thresholds" + flags), 0);
  EXPECT_EQ(cli("pipeline --max_iters 0 --eta_logit_scale 1e-9" + flags), 3);

  // Flip one magic byte of the features.
  const auto features = cfg.path(Artifact::kFeatures);
  auto bytes = io::read_bytes(features);
  bytes[0] = 'X';
  std::ofstream(features, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  EXPECT_EQ(cli("thresholds" + flags), 4);
  try {
    stage_thresholds(cfg);
    FAIL();
  } catch (const io::FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_EQ(e.file(), features);
  }
}

TEST_F(PipelineTest, CliConfigFileAndFlagPrecedence) {
  const auto cfg = small_config("conf");
  const fs::path conf = root_ / "run.conf";
  io::write_text(conf, "work_dir = " + cfg.work_dir.string() + "\nalpha = 0.5\nbeta = 2\n");
  ASSERT_EQ(cli("synth --points-per-cluster 30 --dim 16 --config " + conf.string()), 0);
  ASSERT_EQ(cli("thresholds --beta 0.25 --config " + conf.string()), 0);
  const auto j = json::parse(io::read_text(cfg.path(Artifact::kThresholds)));
  EXPECT_EQ(j["alpha"], 0.5);
  EXPECT_EQ(j["beta"], 0.25);
  io::write_text(conf, "bogus = 1\n");
  EXPECT_EQ(cli("thresholds --config " + conf.string()), 2);
}

TEST_F(PipelineTest, CliIngest) {
  const auto cfg = small_config("ingest");
  io::write_text(root_ / "f.txt", "1 0 0\n0 1 0\n0.9 0.1 0\n0 0 1\n");
  io::write_text(root_ / "l.txt", "1 0\n0 1\n1 0\n0 1\n");
  ASSERT_EQ(cli("ingest --features-text " + (root_ / "f.txt").string() + " --labels-text " + (root_ / "l.txt").string() +
                " --work_dir " + cfg.work_dir.string()),
            0);
  const auto f = load_feature_set(cfg.path(Artifact::kFeatures), cfg.path(Artifact::kLabels));
  EXPECT_EQ(f.n_items(), 4u);
  EXPECT_TRUE(f.has_labels());
  io::write_text(root_ / "bad.txt", "1 0\n1\n");
  EXPECT_EQ(cli("ingest --features-text " + (root_ / "bad.txt").string() + " --work_dir " + cfg.work_dir.string()), 4);
}

}  // namespace
}  // namespace dh
