#include "distillhash/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "distillhash/io.hpp"
#include "distillhash/seeds.hpp"

namespace dh {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ArtifactName {
  Artifact id;
  const char* key;
  const char* file;
};

// Default file names; the hash-side artifacts get a "_star" infix for the noisy variant.
constexpr ArtifactName kArtifacts[] = {
    {Artifact::kFeatures, "features", "features.dhf"},
    {Artifact::kLabels, "labels", "labels.dhl"},
    {Artifact::kQueryFeatures, "query_features", "query_features.dhf"},
    {Artifact::kQueryLabels, "query_labels", "query_labels.dhl"},
    {Artifact::kThresholds, "thresholds", "thresholds.json"},
    {Artifact::kNoisyPairs, "noisy_pairs", "noisy_pairs.dhp"},
    {Artifact::kNoisyReport, "noisy_report", "noisy_report.json"},
    {Artifact::kEtaModel, "eta_model", "eta_model.dhm"},
    {Artifact::kEtaTrace, "eta_trace", "eta_trace.json"},
    {Artifact::kDistilledPairs, "distilled_pairs", "distilled_pairs.dhp"},
    {Artifact::kDistillReport, "distill_report", "distill_report.json"},
    {Artifact::kHashModel, "hash_model", "hash_model.dhm"},
    {Artifact::kHashTrace, "hash_trace", "hash_trace.json"},
    {Artifact::kCodes, "codes", "codes.dhc"},
    {Artifact::kQueryCodes, "query_codes", "query_codes.dhc"},
    {Artifact::kReport, "report", "report.json"},
    {Artifact::kStageLog, "stage_log", "stages.json"},
};

bool variant_specific(Artifact a) {
  switch (a) {
    case Artifact::kHashModel:
    case Artifact::kHashTrace:
    case Artifact::kCodes:
    case Artifact::kQueryCodes:
    case Artifact::kReport:
    case Artifact::kStageLog:
      return true;
    default:
      return false;
  }
}

const ArtifactName& artifact_name(Artifact a) {
  for (const auto& n : kArtifacts)
    if (n.id == a) return n;
  throw std::logic_error("unknown artifact");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  if constexpr (std::is_floating_point_v<T>) {
    // std::from_chars for doubles is not available everywhere yet.
    std::size_t used = 0;
    try {
      out = static_cast<T>(std::stod(value, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size() || !std::isfinite(out))
      throw ConfigError("invalid value for " + key + ": '" + value + "'");
  } else {
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw ConfigError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + value + "'");
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r' || c == ';') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void PipelineConfig::validate() const {
  if (o < 1) throw ConfigError("o must be >= 1");
  if (p < 1) throw ConfigError("p must be >= 1");
  if (K < 1) throw ConfigError("K must be >= 1");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be >= 0");
  if (sample_budget < 1) throw ConfigError("sample_budget must be >= 1");
  for (auto h : hidden)
    if (h < 1) throw ConfigError("hidden layer widths must be >= 1");
  if (eta_logit_scale && !(*eta_logit_scale > 0.0)) throw ConfigError("eta_logit_scale must be > 0");
  if (!(pair_subsample > 0.0 && pair_subsample <= 1.0)) throw ConfigError("pair_subsample must be in (0, 1]");
  if (topN < 1) throw ConfigError("topN must be >= 1");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

double PipelineConfig::resolved_eta_logit_scale() const {
  return eta_logit_scale.value_or(1.0 / std::sqrt(static_cast<double>(p)));
}

fs::path PipelineConfig::path(Artifact a, Variant v) const {
  const auto& name = artifact_name(a);
  fs::path base;
  if (auto it = paths.find(a); it != paths.end() && !it->second.empty()) {
    base = it->second;
  } else {
    base = work_dir / name.file;
  }
  if (v == Variant::kNoisy && variant_specific(a)) {
    auto stem = base.stem().string() + "_star";
    base = base.parent_path() / (stem + base.extension().string());
  }
  return base;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"o",          "p",           "K",          "alpha",           "beta",
                               "sample_budget", "hidden",   "eta_logit_scale", "standardize_inputs",
                               "batch_size", "learning_rate", "momentum", "max_iters",       "tol",
                               "patience_window", "pair_subsample", "topN", "R",              "seed",
                               "work_dir"};
    for (const auto& a : kArtifacts) k.emplace_back(a.key);
    return k;
  }();
  return keys;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  using u64 = std::uint64_t;
  auto count = [&] { return static_cast<std::size_t>(parse_number<u64>(key, value)); };
  if (key == "o") cfg.o = count();
  else if (key == "p") cfg.p = count();
  else if (key == "K") cfg.K = count();
  else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
  else if (key == "beta") cfg.beta = parse_number<double>(key, value);
  else if (key == "sample_budget") cfg.sample_budget = count();
  else if (key == "hidden") {
    cfg.hidden.clear();
    for (const auto& f : split_fields(value)) cfg.hidden.push_back(static_cast<std::size_t>(parse_number<u64>(key, f)));
  } else if (key == "eta_logit_scale") {
    if (value == "auto") cfg.eta_logit_scale.reset();
    else cfg.eta_logit_scale = parse_number<double>(key, value);
  } else if (key == "standardize_inputs") cfg.standardize_inputs = parse_bool(key, value);
  else if (key == "batch_size") cfg.train.batch_size = count();
  else if (key == "learning_rate") cfg.train.learning_rate = parse_number<double>(key, value);
  else if (key == "momentum") cfg.train.momentum = parse_number<double>(key, value);
  else if (key == "max_iters") cfg.train.max_iters = count();
  else if (key == "tol") cfg.train.tol = parse_number<double>(key, value);
  else if (key == "patience_window") cfg.train.patience_window = count();
  else if (key == "pair_subsample") cfg.pair_subsample = parse_number<double>(key, value);
  else if (key == "topN") cfg.topN = count();
  else if (key == "R") cfg.R = count();
  else if (key == "seed") cfg.seed = parse_number<u64>(key, value);
  else if (key == "work_dir") cfg.work_dir = value;
  else {
    for (const auto& a : kArtifacts) {
      if (key == a.key) {
        cfg.paths[a.id] = value;
        return;
      }
    }
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    auto key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), trim(t.substr(eq + 1)));
  }
  return out;
}

FeatureSet parse_feature_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<float> values;
  std::size_t dim = 0, n = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_fields(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    if (n == 0) dim = fields.size();
    if (fields.size() != dim)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " + std::to_string(dim) + " values");
    for (const auto& f : fields) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != f.size()) throw std::invalid_argument("line " + std::to_string(lineno) + ": bad number '" + f + "'");
      values.push_back(static_cast<float>(v));
    }
    ++n;
  }
  return {n, dim, std::move(values)};
}

LabelMatrix parse_label_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::uint8_t> bits;
  std::size_t classes = 0, n = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_fields(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    if (n == 0) classes = fields.size();
    if (fields.size() != classes)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " + std::to_string(classes) + " labels");
    for (const auto& f : fields) {
      if (f != "0" && f != "1") throw std::invalid_argument("line " + std::to_string(lineno) + ": labels must be 0 or 1");
      bits.push_back(f == "1" ? 1 : 0);
    }
    ++n;
  }
  return {n, classes, std::move(bits)};
}

json to_json(const EvalReport& report) {
  json topn = json::array();
  for (const auto& [n, p] : report.topn_precision) topn.push_back({n, p});
  json pr = json::array();
  for (const auto& pt : report.pr_curve) {
    pr.push_back({pt.radius, pt.precision ? json(*pt.precision) : json(nullptr),
                  pt.recall ? json(*pt.recall) : json(nullptr)});
  }
  return {{"map", report.map}, {"topn_precision", topn}, {"pr_curve", pr}};
}

json to_json(const ThresholdEstimate& est) {
  return {{"t1", est.thresholds.t1},
          {"t2", est.thresholds.t2},
          {"mean", est.mean},
          {"stddev", est.stddev},
          {"sampled_pairs", est.sampled_pairs}};
}

json to_json(const AssumptionReport& rep) {
  return {{"rho_pos_hat", rep.rho_pos_hat ? json(*rep.rho_pos_hat) : json(nullptr)},
          {"rho_neg_hat", rep.rho_neg_hat ? json(*rep.rho_neg_hat) : json(nullptr)},
          {"true_pos_pairs", rep.true_pos_pairs},
          {"true_neg_pairs", rep.true_neg_pairs},
          {"sum", rep.sum},
          {"holds", rep.holds}};
}

json to_json(const DistillStats& s) {
  return {{"candidate_pairs", s.candidate_pairs},
          {"distilled_pos", s.distilled_pos},
          {"distilled_neg", s.distilled_neg},
          {"fraction_distilled", s.fraction_distilled},
          {"eta_histogram", s.eta_histogram}};
}

json trace_to_json(std::span<const double> trace) {
  json arr = json::array();
  for (std::size_t k = 0; k < trace.size(); ++k) arr.push_back({{"iter", k}, {"loss", trace[k]}});
  return arr;
}

ThresholdPair thresholds_from_json(const json& j) {
  ThresholdPair t{j.at("t1").get<double>(), j.at("t2").get<double>()};
  t.validate();
  return t;
}

FeatureSet load_feature_set(const fs::path& features, const fs::path& labels) {
  auto fsn = io::read_features(features);
  if (!labels.empty() && fs::exists(labels)) {
    auto lab = io::read_labels(labels);
    if (lab.n_items() != fsn.n_items())
      throw io::FormatError(labels, 4, "label rows (" + std::to_string(lab.n_items()) + ") do not match feature rows (" +
                                           std::to_string(fsn.n_items()) + ")");
    try {
      return fsn.with_labels(std::move(lab));
    } catch (const std::invalid_argument& e) {
      throw io::FormatError(labels, 12, e.what());
    }
  }
  return fsn;
}

namespace {

FeatureSet load_training_set(const PipelineConfig& cfg) {
  return load_feature_set(cfg.path(Artifact::kFeatures), cfg.path(Artifact::kLabels));
}

PairTruth truth_from(const LabelMatrix& labels) {
  return [&labels](std::size_t i, std::size_t j) {
    return ground_truth_similarity(labels.row(i), labels.row(j)) ? PairSign::kSimilar : PairSign::kDissimilar;
  };
}

json to_json(const TrainSummary& s) {
  return {{"pairs", s.pairs},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"initial_loss", s.initial_loss},
          {"final_loss", s.final_loss}};
}

// Trains an encoder of the given output width on `pairs`; standardization, when enabled, is
// fitted on the training features and folded into the saved first layer.
TrainSummary train_and_save(const PipelineConfig& cfg, const FeatureSet& features, std::span<const PairLabel> pairs,
                            std::size_t out_dim, double logit_scale, const std::string& stage,
                            const fs::path& model_path, const fs::path& trace_path) {
  std::vector<std::size_t> dims{features.dim()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(out_dim);

  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, stage + "/sgd");
  tc.logit_scale = logit_scale;
  const auto init = init_encoder(dims, derive_seed(cfg.seed, stage + "/init"));

  TrainResult res;
  if (cfg.standardize_inputs) {
    const auto st = fit_standardizer(features);
    res = train_encoder(init, pairs, standardize(features, st), tc);
    res.model = fold_standardizer(res.model, st);
  } else {
    res = train_encoder(init, pairs, features, tc);
  }
  io::write_model(model_path, res.model);
  io::write_text(trace_path, trace_to_json(res.loss_trace).dump() + "\n");

  TrainSummary s;
  s.pairs = pairs.size();
  s.iterations = res.iterations;
  s.converged = res.converged;
  if (!res.loss_trace.empty()) {
    s.initial_loss = res.loss_trace.front();
    s.final_loss = res.loss_trace.back();
  }
  return s;
}

}  // namespace

void stage_synth(const PipelineConfig& cfg, const SyntheticSpec& spec, std::size_t queries_per_cluster) {
  const auto db = synth_generate(spec);
  io::write_features(cfg.path(Artifact::kFeatures), db);
  io::write_labels(cfg.path(Artifact::kLabels), db.labels());
  if (queries_per_cluster > 0) {
    const auto q = synth_generate_queries(spec, queries_per_cluster);
    io::write_features(cfg.path(Artifact::kQueryFeatures), q);
    io::write_labels(cfg.path(Artifact::kQueryLabels), q.labels());
  }
}

ThresholdEstimate stage_thresholds(const PipelineConfig& cfg) {
  cfg.validate();
  const auto features = load_training_set(cfg);
  auto est = estimate_thresholds(features, cfg.alpha, cfg.beta, cfg.sample_budget, derive_seed(cfg.seed, "thresholds"));
  json j = to_json(est);
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  io::write_text(cfg.path(Artifact::kThresholds), j.dump(2) + "\n");
  return est;
}

AssumptionReport stage_noisy_labels(const PipelineConfig& cfg) {
  cfg.validate();
  const auto features = load_training_set(cfg);
  const auto thr_path = cfg.path(Artifact::kThresholds);
  ThresholdPair thr;
  try {
    thr = thresholds_from_json(json::parse(io::read_text(thr_path)));
  } catch (const json::exception& e) {
    throw io::FormatError(thr_path, 0, e.what());
  }
  const auto noisy = build_noisy_labels(features, thr);
  io::write_pairs(cfg.path(Artifact::kNoisyPairs), noisy.pairs);

  std::size_t pos = 0;
  for (const auto& p : noisy.pairs) pos += p.s == PairSign::kSimilar;
  json rep{{"pairs", noisy.pairs.size()}, {"positive", pos}, {"negative", noisy.pairs.size() - pos}};
  AssumptionReport assumption;
  if (features.has_labels()) {
    assumption = validate_assumption(noisy, features.labels());
    rep["assumption"] = to_json(assumption);
    rep["fidelity"] = label_fidelity(noisy.pairs, truth_from(features.labels())).value_or(0.0);
  }
  io::write_text(cfg.path(Artifact::kNoisyReport), rep.dump(2) + "\n");
  return assumption;
}

TrainSummary stage_train_eta(const PipelineConfig& cfg) {
  cfg.validate();
  const auto features = load_training_set(cfg);
  const auto pairs = io::read_pairs(cfg.path(Artifact::kNoisyPairs));
  return train_and_save(cfg, features, pairs, cfg.p, cfg.resolved_eta_logit_scale(), "eta",
                        cfg.path(Artifact::kEtaModel), cfg.path(Artifact::kEtaTrace));
}

DistillSummary stage_distill(const PipelineConfig& cfg) {
  cfg.validate();
  const auto features = load_training_set(cfg);
  const auto model = io::read_model(cfg.path(Artifact::kEtaModel));
  if (model.output_dim() != cfg.p)
    throw ConfigError("eta model outputs " + std::to_string(model.output_dim()) + " dims but p = " + std::to_string(cfg.p));
  const auto eta = estimate_eta(model, features, cfg.resolved_eta_logit_scale());
  const auto graph = build_neighbor_graph(features, cfg.o);
  DistillOptions opts{cfg.pair_subsample, derive_seed(cfg.seed, "distill/subsample")};
  const auto distilled = distill_pairs(eta, graph, opts);

  DistillSummary summary;
  summary.stats = summarize_distillation(eta, distilled, opts);
  json rep = to_json(summary.stats);
  rep["o"] = cfg.o;
  rep["eta_logit_scale"] = cfg.resolved_eta_logit_scale();
  if (features.has_labels()) {
    const auto truth = truth_from(features.labels());
    summary.distilled_fidelity = label_fidelity(distilled.pairs, truth);
    const auto noisy_path = cfg.path(Artifact::kNoisyPairs);
    if (fs::exists(noisy_path)) {
      NoisyPairLabels noisy{features.n_items(), io::read_pairs(noisy_path)};
      summary.noisy_fidelity = label_fidelity(noisy.pairs, truth);
      rep["assumption"] = to_json(validate_assumption(noisy, features.labels()));
    }
    rep["distilled_fidelity"] = summary.distilled_fidelity ? json(*summary.distilled_fidelity) : json(nullptr);
    rep["noisy_fidelity"] = summary.noisy_fidelity ? json(*summary.noisy_fidelity) : json(nullptr);
  }
  io::write_text(cfg.path(Artifact::kDistillReport), rep.dump(2) + "\n");
  io::write_pairs(cfg.path(Artifact::kDistilledPairs), distilled.pairs);
  if (distilled.pairs.empty()) {
    throw EmptyDistilledSet("distillation selected no pairs out of " + std::to_string(summary.stats.candidate_pairs) +
                                " candidates; eta histogram " + json(summary.stats.eta_histogram).dump(),
                            rep);
  }
  return summary;
}

TrainSummary stage_train_hash(const PipelineConfig& cfg, Variant variant) {
  cfg.validate();
  const auto features = load_training_set(cfg);
  const auto pairs = io::read_pairs(
      cfg.path(variant == Variant::kDistilled ? Artifact::kDistilledPairs : Artifact::kNoisyPairs));
  if (pairs.empty()) {
    throw EmptyDistilledSet("no pairs to train the hash encoder on", json{{"pairs", 0}});
  }
  // Both variants draw the same initialization and minibatch streams.
  return train_and_save(cfg, features, pairs, cfg.K, 1.0, "hash", cfg.path(Artifact::kHashModel, variant),
                        cfg.path(Artifact::kHashTrace, variant));
}

namespace {

BinaryCodes encode(const EncoderModel& model, const FeatureSet& features) {
  const Eigen::MatrixXd z = forward_all(model, features);
  BinaryCodes codes(features.n_items(), model.output_dim());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const Eigen::VectorXd col = z.col(i);
    codes.set_row(static_cast<std::size_t>(i), sign_binarize(std::span<const double>(col.data(), col.size())));
  }
  return codes;
}

}  // namespace

void stage_encode(const PipelineConfig& cfg, Variant variant) {
  cfg.validate();
  const auto model = io::read_model(cfg.path(Artifact::kHashModel, variant));
  io::write_codes(cfg.path(Artifact::kCodes, variant), encode(model, io::read_features(cfg.path(Artifact::kFeatures))));
  const auto qf = cfg.path(Artifact::kQueryFeatures);
  if (fs::exists(qf)) io::write_codes(cfg.path(Artifact::kQueryCodes, variant), encode(model, io::read_features(qf)));
}

std::optional<EvalReport> stage_evaluate(const PipelineConfig& cfg, Variant variant) {
  cfg.validate();
  const auto db_labels_path = cfg.path(Artifact::kLabels);
  if (!fs::exists(db_labels_path)) return std::nullopt;
  const auto db_codes = io::read_codes(cfg.path(Artifact::kCodes, variant));
  const auto db_labels = io::read_labels(db_labels_path);

  BinaryCodes q_codes;
  LabelMatrix q_labels;
  const auto qc = cfg.path(Artifact::kQueryCodes, variant);
  const auto ql = cfg.path(Artifact::kQueryLabels);
  const bool held_out = fs::exists(qc) && fs::exists(ql);
  if (held_out) {
    q_codes = io::read_codes(qc);
    q_labels = io::read_labels(ql);
  }
  const BinaryCodes& queries = held_out ? q_codes : db_codes;
  const LabelMatrix& query_labels = held_out ? q_labels : db_labels;
  if (db_labels.n_items() != db_codes.n_items())
    throw io::FormatError(db_labels_path, 4, "label rows do not match database codes");
  if (query_labels.n_items() != queries.n_items()) throw io::FormatError(ql, 4, "label rows do not match query codes");

  EvalConfig ec;
  ec.R = cfg.R;
  ec.topN = std::min(cfg.topN, db_codes.n_items());
  auto report = evaluate({queries, query_labels}, {db_codes, db_labels}, ec);
  io::write_text(cfg.path(Artifact::kReport, variant), to_json(report).dump() + "\n");
  return report;
}

namespace {

PipelineResult run(const PipelineConfig& cfg, Variant variant) {
  cfg.validate();
  PipelineResult r;
  json log = json::array();
  auto mark = [&](const std::string& stage, json detail) {
    r.stages.push_back(stage);
    log.push_back({{"stage", stage}, {"detail", std::move(detail)}});
  };

  const auto est = stage_thresholds(cfg);
  mark("thresholds", to_json(est));
  const auto assumption = stage_noisy_labels(cfg);
  mark("noisy-labels", to_json(assumption));

  if (variant == Variant::kDistilled) {
    r.eta_training = stage_train_eta(cfg);
    mark("train-eta", to_json(r.eta_training));
    try {
      r.distill = stage_distill(cfg);
    } catch (const EmptyDistilledSet& e) {
      mark("distill", e.diagnostic());
      io::write_text(cfg.path(Artifact::kStageLog, variant), json{{"stages", log}}.dump(2) + "\n");
      throw;
    }
    json d = to_json(r.distill->stats);
    if (r.distill->distilled_fidelity) d["distilled_fidelity"] = *r.distill->distilled_fidelity;
    if (r.distill->noisy_fidelity) d["noisy_fidelity"] = *r.distill->noisy_fidelity;
    mark("distill", d);
  }

  r.hash_training = stage_train_hash(cfg, variant);
  mark("train-hash", to_json(r.hash_training));
  stage_encode(cfg, variant);
  mark("encode", json::object());
  r.report = stage_evaluate(cfg, variant);
  mark("evaluate", r.report ? json{{"map", r.report->map}} : json::object());

  r.stage_log = {{"variant", variant == Variant::kDistilled ? "distilled" : "noisy"}, {"stages", log}};
  io::write_text(cfg.path(Artifact::kStageLog, variant), r.stage_log.dump(2) + "\n");
  return r;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) { return run(cfg, Variant::kDistilled); }

PipelineResult run_variant_star(const PipelineConfig& cfg) { return run(cfg, Variant::kNoisy); }

}  // namespace dh
