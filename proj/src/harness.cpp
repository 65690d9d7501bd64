// SPDX-License-Identifier: Apache-2.0

#include "slsec/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "slsec/error.hpp"
#include "slsec/metrics.hpp"

namespace slsec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    require(pos == v.size(), ErrorKind::kFormat, "");
    return x;
  } catch (const std::exception&) {
    raise(ErrorKind::kFormat, "config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    require(pos == v.size(), ErrorKind::kFormat, "");
    return x;
  } catch (const std::exception&) {
    raise(ErrorKind::kFormat,
          "config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  raise(ErrorKind::kFormat, "config: '" + key + "' expects a boolean, got '" + v + "'");
}

NormStandard norm_standard_from_string(const std::string& v) {
  if (v == "off") return NormStandard::kOff;
  if (v == "min") return NormStandard::kMin;
  if (v == "mean") return NormStandard::kMean;
  if (v == "max") return NormStandard::kMax;
  raise(ErrorKind::kFormat, "config: unknown norm standard '" + v + "'");
}

std::string to_string(NormStandard s) {
  switch (s) {
    case NormStandard::kOff: return "off";
    case NormStandard::kMin: return "min";
    case NormStandard::kMean: return "mean";
    case NormStandard::kMax: return "max";
  }
  return "off";
}

std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const std::vector<std::string> kKnownAttacks = {
    "norm", "direction", "spectral", "model_completion", "infer_k"};

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (auto hash = t.find('#'); hash != std::string::npos) t = trim(t.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      require(t.back() == ']', ErrorKind::kFormat,
              "config: bad section header at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    auto eq = t.find('=');
    require(eq != std::string::npos, ErrorKind::kFormat,
            "config: expected key = value at line " + std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    require(!key.empty(), ErrorKind::kFormat,
            "config: empty key at line " + std::to_string(lineno));
    apply_override(cfg, section.empty() ? key : section + "." + key, value);
  }
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "data.kind") {
    if (value == "synthetic") cfg.data.kind = DataSpec::Kind::kSynthetic;
    else if (value == "csv") cfg.data.kind = DataSpec::Kind::kCsv;
    else if (value == "idx") cfg.data.kind = DataSpec::Kind::kIdx;
    else raise(ErrorKind::kFormat, "config: unknown data kind '" + value + "'");
  } else if (key == "data.n") {
    cfg.data.n = parse_u64(value, key);
  } else if (key == "data.d") {
    cfg.data.d = parse_u64(value, key);
  } else if (key == "data.k") {
    cfg.data.k = static_cast<int>(parse_u64(value, key));
  } else if (key == "data.class_weights") {
    cfg.data.class_weights.clear();
    for (const auto& w : split_list(value))
      cfg.data.class_weights.push_back(parse_double(w, key));
  } else if (key == "data.separation") {
    cfg.data.separation = parse_double(value, key);
  } else if (key == "data.csv_path") {
    cfg.data.csv_path = value;
  } else if (key == "data.label_column") {
    cfg.data.label_column = value;
  } else if (key == "data.idx_images") {
    cfg.data.idx_images = value;
  } else if (key == "data.idx_labels") {
    cfg.data.idx_labels = value;
  } else if (key == "data.test_fraction") {
    cfg.data.test_fraction = parse_double(value, key);
  } else if (key == "model.bottom_hidden") {
    cfg.model.bottom_hidden = parse_u64(value, key);
  } else if (key == "model.cut_width") {
    cfg.model.cut_width = parse_u64(value, key);
  } else if (key == "model.top_hidden") {
    cfg.model.top_hidden = parse_u64(value, key);
  } else if (key == "train.epochs") {
    cfg.epochs = static_cast<std::uint32_t>(parse_u64(value, key));
  } else if (key == "train.batch_size") {
    cfg.batch_size = parse_u64(value, key);
  } else if (key == "train.learning_rate") {
    cfg.learning_rate = parse_double(value, key);
  } else if (key == "train.schedule") {
    cfg.schedule = value;
  } else if (key == "train.seed") {
    cfg.seed = parse_u64(value, key);
  } else if (key == "defense.enabled") {
    cfg.defense_enabled = parse_bool(value, key);
  } else if (key == "defense.K") {
    cfg.defense.K = static_cast<int>(parse_u64(value, key));
  } else if (key == "defense.norm_standard") {
    cfg.defense.norm_standard = norm_standard_from_string(value);
  } else if (key == "defense.mu") {
    cfg.defense.mu = parse_double(value, key);
  } else if (key == "defense.noise_resample") {
    if (value == "per_epoch") cfg.defense.noise_resample = NoiseResample::kPerEpoch;
    else if (value == "once") cfg.defense.noise_resample = NoiseResample::kOnce;
    else raise(ErrorKind::kFormat, "config: unknown noise_resample '" + value + "'");
  } else if (key == "defense.renormalize") {
    cfg.defense.renormalize_targets = parse_bool(value, key);
  } else if (key == "attacks.run") {
    cfg.attacks = split_list(value);
  } else if (key == "attacks.aux_per_class") {
    cfg.aux_per_class = parse_u64(value, key);
  } else if (key == "attacks.direction_reference") {
    cfg.direction_reference = parse_u64(value, key);
  } else if (key == "attacks.spectral_source") {
    cfg.spectral_source = value;
  } else if (key == "attacks.infer_k_max") {
    cfg.infer_k_max = static_cast<int>(parse_u64(value, key));
  } else if (key == "output.dir") {
    cfg.output_dir = value;
  } else if (key == "output.trace") {
    cfg.output_trace = parse_bool(value, key);
  } else {
    raise(ErrorKind::kFormat, "config: unknown key '" + key + "'");
  }
}

void validate_config(ExperimentConfig& cfg) {
  if (cfg.data.kind == DataSpec::Kind::kSynthetic) {
    require(cfg.data.k >= 2, ErrorKind::kArgument, "config: data.k must be >= 2");
    require(cfg.data.d >= static_cast<std::size_t>(cfg.data.k),
            ErrorKind::kArgument, "config: synthetic data needs d >= k");
    require(cfg.data.n >= 8, ErrorKind::kArgument, "config: data.n too small");
    if (cfg.data.class_weights.empty()) {
      if (cfg.data.k == 2) {
        cfg.data.class_weights = {0.95, 0.05};
      } else {
        cfg.data.class_weights.assign(static_cast<std::size_t>(cfg.data.k),
                                      1.0 / cfg.data.k);
      }
    }
    require(cfg.data.class_weights.size() == static_cast<std::size_t>(cfg.data.k),
            ErrorKind::kArgument, "config: class_weights length != k");
    double sum = std::accumulate(cfg.data.class_weights.begin(),
                                 cfg.data.class_weights.end(), 0.0);
    require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::kArgument,
            "config: class_weights must sum to 1");
    require(cfg.data.separation >= 0.0, ErrorKind::kArgument,
            "config: separation must be >= 0");
  } else if (cfg.data.kind == DataSpec::Kind::kCsv) {
    require(!cfg.data.csv_path.empty() && !cfg.data.label_column.empty(),
            ErrorKind::kArgument, "config: csv_path and label_column required");
  } else {
    require(!cfg.data.idx_images.empty() && !cfg.data.idx_labels.empty(),
            ErrorKind::kArgument, "config: idx_images and idx_labels required");
  }
  require(cfg.data.test_fraction > 0.0 && cfg.data.test_fraction < 1.0,
          ErrorKind::kArgument, "config: test_fraction must be in (0, 1)");

  // top_hidden = 0 selects a single-layer (logistic) top: cut -> classes.
  require(cfg.model.bottom_hidden >= 1 && cfg.model.cut_width >= 1,
          ErrorKind::kArgument, "config: model widths must be >= 1");
  require(cfg.epochs >= 1, ErrorKind::kArgument, "config: epochs must be >= 1");
  require(cfg.batch_size >= 1, ErrorKind::kArgument,
          "config: batch_size must be >= 1");
  require(cfg.learning_rate > 0.0, ErrorKind::kArgument,
          "config: learning_rate must be > 0");
  require(cfg.schedule == "constant" || cfg.schedule == "inverse_time",
          ErrorKind::kArgument, "config: unknown schedule '" + cfg.schedule + "'");

  // Class count is only known up front for synthetic data; for csv/idx the
  // same defense checks re-run after loading.
  if (cfg.defense_enabled && cfg.data.kind == DataSpec::Kind::kSynthetic) {
    if (cfg.defense.K == 0) cfg.defense.K = 10 * cfg.data.k;
    validate_defense(cfg.defense, cfg.data.k);
  }
  require(cfg.defense.mu >= 0.0 && cfg.defense.mu < 1.0, ErrorKind::kArgument,
          "config: defense.mu must be in [0, 1)");

  for (const auto& a : cfg.attacks) {
    require(std::find(kKnownAttacks.begin(), kKnownAttacks.end(), a) !=
                kKnownAttacks.end(),
            ErrorKind::kArgument, "config: unknown attack '" + a + "'");
    if (a == "infer_k") {
      require(cfg.defense_enabled, ErrorKind::kArgument,
              "config: infer_k attack requires the defense to be enabled");
    }
    if (a == "direction" && cfg.data.kind == DataSpec::Kind::kSynthetic) {
      require(cfg.data.k == 2, ErrorKind::kUnsupported,
              "config: direction attack supports binary tasks only");
    }
  }
  require(cfg.aux_per_class >= 1, ErrorKind::kArgument,
          "config: aux_per_class must be >= 1");
  require(cfg.spectral_source == "embeddings" || cfg.spectral_source == "gradients",
          ErrorKind::kArgument,
          "config: spectral_source must be embeddings or gradients");
  require(cfg.infer_k_max == 0 || cfg.infer_k_max >= 2, ErrorKind::kArgument,
          "config: infer_k_max must be 0 (auto) or >= 2");

  if (cfg.output_dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    cfg.output_dir = env && *env ? env : "records";
  }
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  json j;
  json data;
  data["kind"] = cfg.data.kind == DataSpec::Kind::kSynthetic ? "synthetic"
                 : cfg.data.kind == DataSpec::Kind::kCsv     ? "csv"
                                                             : "idx";
  if (cfg.data.kind == DataSpec::Kind::kSynthetic) {
    data["n"] = cfg.data.n;
    data["d"] = cfg.data.d;
    data["k"] = cfg.data.k;
    data["class_weights"] = cfg.data.class_weights;
    data["separation"] = cfg.data.separation;
  } else if (cfg.data.kind == DataSpec::Kind::kCsv) {
    data["csv_path"] = cfg.data.csv_path;
    data["label_column"] = cfg.data.label_column;
  } else {
    data["idx_images"] = cfg.data.idx_images;
    data["idx_labels"] = cfg.data.idx_labels;
  }
  data["test_fraction"] = cfg.data.test_fraction;
  j["data"] = data;

  j["model"] = {{"bottom_hidden", cfg.model.bottom_hidden},
                {"cut_width", cfg.model.cut_width},
                {"top_hidden", cfg.model.top_hidden}};
  j["train"] = {{"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"learning_rate", cfg.learning_rate},
                {"schedule", cfg.schedule},
                {"seed", cfg.seed}};
  json defense;
  defense["enabled"] = cfg.defense_enabled;
  if (cfg.defense_enabled) {
    defense["K"] = cfg.defense.K;
    defense["norm_standard"] = to_string(cfg.defense.norm_standard);
    defense["mu"] = cfg.defense.mu;
    defense["noise_resample"] =
        cfg.defense.noise_resample == NoiseResample::kPerEpoch ? "per_epoch"
                                                               : "once";
    defense["renormalize"] = cfg.defense.renormalize_targets;
  }
  j["defense"] = defense;
  j["attacks"] = {{"run", cfg.attacks},
                  {"aux_per_class", cfg.aux_per_class},
                  {"direction_reference", cfg.direction_reference},
                  {"spectral_source", cfg.spectral_source},
                  {"infer_k_max", cfg.infer_k_max}};
  return j;
}

std::string config_run_id(const ExperimentConfig& cfg) {
  std::uint64_t h = fnv1a64(config_to_json(cfg).dump());
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

namespace {

struct BuiltData {
  Dataset train;
  Dataset test;
};

BuiltData build_data(const ExperimentConfig& cfg, const RngStream& root) {
  Dataset full;
  if (cfg.data.kind == DataSpec::Kind::kSynthetic) {
    RngStream data_rng = root.child("data");
    full = gen_synthetic(cfg.data.n, cfg.data.d, cfg.data.k,
                         cfg.data.class_weights, cfg.data.separation, data_rng);
  } else if (cfg.data.kind == DataSpec::Kind::kCsv) {
    full = load_csv(cfg.data.csv_path, cfg.data.label_column);
  } else {
    full = load_idx(cfg.data.idx_images, cfg.data.idx_labels);
  }
  RngStream split_rng = root.child("split");
  auto [train, test] = train_test_split(full, cfg.data.test_fraction, split_rng);
  return BuiltData{std::move(train), std::move(test)};
}

int majority_class(const std::vector<int>& labels, int k) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());
}

// Per-sample binary labels aligned with a report's sample ids.
std::vector<int> labels_for_ids(const AttackReport& report,
                                const std::vector<int>& labels) {
  std::vector<int> out;
  out.reserve(report.sample_ids.size());
  for (std::uint64_t id : report.sample_ids)
    out.push_back(labels[static_cast<std::size_t>(id)]);
  return out;
}

json window_json(const TapWindow& w) {
  return json{{"first_epoch", w.first_epoch}, {"last_epoch", w.last_epoch}};
}

void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::kIo, "cannot open " + tmp);
    out << content;
    require(out.good(), ErrorKind::kIo, "write failed for " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorKind::kIo, "rename failed for " + path);
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& raw_cfg) {
  ExperimentConfig cfg = raw_cfg;
  validate_config(cfg);

  RngStream root(cfg.seed);
  BuiltData data = build_data(cfg, root);
  const int k = data.train.k;
  require(k >= 2, ErrorKind::kArgument, "run_experiment: need at least 2 classes");

  ExperimentConfig resolved = cfg;
  if (cfg.defense_enabled) {
    if (resolved.defense.K == 0) resolved.defense.K = 10 * k;
    validate_defense(resolved.defense, k);
  }
  for (const auto& a : resolved.attacks) {
    if (a == "direction") {
      require(k == 2, ErrorKind::kUnsupported,
              "run_experiment: direction attack supports binary tasks only");
    }
  }

  const std::size_t out_width = cfg.defense_enabled
                                    ? static_cast<std::size_t>(resolved.defense.K)
                                    : static_cast<std::size_t>(k);
  RngStream bottom_rng = root.child("model.bottom");
  Network bottom = Network::make(
      {data.train.dim(), cfg.model.bottom_hidden, cfg.model.cut_width},
      {Activation::kRelu, Activation::kIdentity}, bottom_rng);
  RngStream top_rng = root.child("model.top");
  Network top =
      cfg.model.top_hidden > 0
          ? Network::make({cfg.model.cut_width, cfg.model.top_hidden, out_width},
                          {Activation::kRelu, Activation::kSoftmaxAtLoss}, top_rng)
          : Network::make({cfg.model.cut_width, out_width},
                          {Activation::kSoftmaxAtLoss}, top_rng);

  TrainConfig tcfg;
  tcfg.epochs = cfg.epochs;
  tcfg.batch_size = cfg.batch_size;
  tcfg.seed = cfg.seed;
  if (cfg.defense_enabled) tcfg.defense = resolved.defense;
  tcfg.optimizer.learning_rate = cfg.learning_rate;
  tcfg.optimizer.schedule = cfg.schedule == "constant"
                                ? OptimizerState::Schedule::kConstant
                                : OptimizerState::Schedule::kInverseTime;

  TrainResult trained = run_training(std::move(bottom), std::move(top),
                                     data.train, tcfg);
  const MappingPools* pools = trained.pools ? &*trained.pools : nullptr;
  UtilityReport utility = evaluate(trained.model, data.test, pools);

  RunOutput out;
  out.run_id = config_run_id(resolved);

  json attacks_json = json::array();
  std::optional<InferKResult> infer_k;
  const int hint = majority_class(data.train.labels, k);

  for (const auto& name : resolved.attacks) {
    AttackOptions opts;
    opts.task_classes = k;
    opts.majority_class_hint = hint;
    opts.direction_reference = resolved.direction_reference;

    if (name == "norm" || name == "direction" || name == "spectral") {
      AttackReport report;
      if (name == "norm") {
        report = norm_attack(trained.tap, opts);
      } else if (name == "direction") {
        report = direction_attack(trained.tap, hint, opts);
      } else {
        report = spectral_attack(trained.tap,
                                 resolved.spectral_source == "gradients"
                                     ? SpectralSource::kGradients
                                     : SpectralSource::kEmbeddings,
                                 opts);
      }
      json aj;
      aj["name"] = report.attack;
      aj["n_samples"] = report.sample_ids.size();
      aj["window"] = window_json(report.window);
      if (k == 2) {
        std::vector<int> truth = labels_for_ids(report, data.train.labels);
        double auc = roc_auc(report.scores, truth);
        report.leak = std::max(auc, 1.0 - auc);
        aj["roc_auc"] = auc;
        aj["leak_auc"] = *report.leak;
        if (!report.predicted_labels.empty()) {
          aj["predicted_accuracy"] = accuracy(report.predicted_labels, truth);
        }
      } else {
        aj["leak_auc"] = nullptr;  // leak AUC is a binary-task metric
      }
      attacks_json.push_back(aj);
      out.attack_reports.push_back(std::move(report));
    } else if (name == "model_completion") {
      // Split the training set into a small labeled auxiliary set and the
      // unlabeled rest the adversary wants to label.
      std::vector<std::vector<std::size_t>> by_class(
          static_cast<std::size_t>(k));
      for (std::size_t i = 0; i < data.train.size(); ++i)
        by_class[static_cast<std::size_t>(data.train.labels[i])].push_back(i);
      RngStream aux_rng = root.child("mc.aux");
      std::vector<std::size_t> aux_idx, rest_idx;
      for (auto& members : by_class) {
        require(members.size() > resolved.aux_per_class, ErrorKind::kArgument,
                "model_completion: class too small for aux_per_class");
        aux_rng.shuffle(members);
        aux_idx.insert(aux_idx.end(), members.begin(),
                       members.begin() + static_cast<std::ptrdiff_t>(
                                             resolved.aux_per_class));
        rest_idx.insert(rest_idx.end(),
                        members.begin() + static_cast<std::ptrdiff_t>(
                                              resolved.aux_per_class),
                        members.end());
      }
      std::sort(aux_idx.begin(), aux_idx.end());
      std::sort(rest_idx.begin(), rest_idx.end());
      auto subset = [&](const std::vector<std::size_t>& idx) {
        Dataset d2;
        d2.k = k;
        d2.features = Matrix(idx.size(), data.train.dim());
        d2.labels.reserve(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
          auto src = data.train.features.row(idx[r]);
          std::copy(src.begin(), src.end(), d2.features.row(r).begin());
          d2.labels.push_back(data.train.labels[idx[r]]);
        }
        return d2;
      };
      Dataset aux = subset(aux_idx);
      Dataset unlabeled = subset(rest_idx);

      ModelCompletionOptions mc;
      mc.seed = splitmix64(cfg.seed ^ fnv1a64("mc"));
      AttackReport report =
          model_completion_attack(trained.model.bottom, aux, unlabeled, mc);
      std::vector<int> truth = unlabeled.labels;
      double acc = accuracy(report.predicted_labels, truth);
      json aj;
      aj["name"] = report.attack;
      aj["n_samples"] = report.sample_ids.size();
      aj["aux_per_class"] = resolved.aux_per_class;
      aj["accuracy"] = acc;
      if (k == 2) {
        double auc = roc_auc(report.scores, truth);
        report.leak = std::max(auc, 1.0 - auc);
        aj["roc_auc"] = auc;
        aj["leak_auc"] = *report.leak;
      } else {
        report.leak = acc;
        aj["leak_auc"] = nullptr;
      }
      attacks_json.push_back(aj);
      out.attack_reports.push_back(std::move(report));
    } else if (name == "infer_k") {
      RngStream ik_rng = root.child("inferk");
      InferKOptions iko;
      int k_max = resolved.infer_k_max > 0 ? resolved.infer_k_max
                                           : 2 * resolved.defense.K;
      infer_k = infer_k_attack(trained.tap, k, k_max, ik_rng, iko);
      json aj;
      aj["name"] = "infer_k";
      aj["guessed_dimension"] = infer_k->guessed_dimension;
      aj["true_dimension"] = resolved.defense.K;
      json curve = json::object();
      for (const auto& [c, s] : infer_k->scores) curve[std::to_string(c)] = s;
      aj["scores"] = curve;
      attacks_json.push_back(aj);
    }
  }

  json record;
  record["tool_version"] = kToolVersion;
  record["timestamp"] = timestamp_utc();
  record["run_id"] = out.run_id;
  record["config"] = config_to_json(resolved);
  record["train"] = {{"epoch_losses", trained.epoch_losses},
                     {"initial_loss", trained.epoch_losses.front()},
                     {"final_loss", trained.epoch_losses.back()},
                     {"n_train", data.train.size()},
                     {"n_test", data.test.size()},
                     {"k", k}};
  json test;
  test["metric"] = utility.metric;
  test["utility"] = utility.utility;
  test["accuracy_weighted"] = utility.accuracy_weighted;
  test["accuracy_maximum"] = utility.accuracy_maximum;
  if (utility.auc) test["auc"] = *utility.auc;
  record["test"] = test;
  record["attacks"] = attacks_json;
  record["timing"] = {{"default_train_s", trained.timing.default_train_s},
                      {"dim_transform_s", trained.timing.dim_transform_s},
                      {"grad_norm_s", trained.timing.grad_norm_s},
                      {"noise_rand_s", trained.timing.noise_rand_s},
                      {"total_s", trained.timing.total_s}};
  out.record = std::move(record);
  out.pools = std::move(trained.pools);
  if (resolved.output_trace) {
    out.trace.reserve(trained.tap.embeddings.size() + trained.tap.gradients.size());
    for (const auto& m : trained.tap.embeddings) out.trace.emplace_back(m);
    for (const auto& m : trained.tap.gradients) out.trace.emplace_back(m);
  }
  out.model = std::move(trained.model);
  return out;
}

std::string write_run(const RunOutput& out, const std::string& dir) {
  fs::create_directories(dir);
  auto rename_into_place = [](const std::string& tmp, const std::string& path) {
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorKind::kIo, "write_run: rename failed for " + path);
  };

  std::string record_path = (fs::path(dir) / ("run_" + out.run_id + ".json")).string();
  atomic_write(record_path, out.record.dump(2) + "\n");
  for (const auto& report : out.attack_reports) {
    std::string csv_path =
        (fs::path(dir) / ("run_" + out.run_id + "_" + report.attack + ".csv"))
            .string();
    write_report_csv(report, csv_path + ".tmp");
    rename_into_place(csv_path + ".tmp", csv_path);
  }
  if (!out.model.bottom.layers.empty()) {
    std::string ckpt = (fs::path(dir) / ("run_" + out.run_id + ".bottom.slmd")).string();
    save_network(out.model.bottom, ckpt + ".tmp");
    rename_into_place(ckpt + ".tmp", ckpt);
  }
  if (out.pools) {
    std::string sidecar = (fs::path(dir) / ("run_" + out.run_id + ".pools.txt")).string();
    save_pools(*out.pools, sidecar + ".tmp");
    rename_into_place(sidecar + ".tmp", sidecar);
  }
  if (!out.trace.empty()) {
    std::string trace_path = (fs::path(dir) / ("run_" + out.run_id + ".sltrace")).string();
    write_trace(trace_path + ".tmp", out.trace);
    rename_into_place(trace_path + ".tmp", trace_path);
  }
  return record_path;
}

SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::vector<double>& values) {
  require(!values.empty(), ErrorKind::kArgument, "sweep: empty values list");
  ExperimentConfig cfg = base;
  cfg.defense_enabled = true;
  validate_config(cfg);

  // Reject every invalid value before any run starts.
  for (double v : values) {
    if (axis == SweepAxis::kDimension) {
      double rounded = std::round(v);
      require(rounded == v && v >= cfg.data.k, ErrorKind::kArgument,
              "sweep: dimension values must be integers >= k");
      if (cfg.data.kind == DataSpec::Kind::kSynthetic) {
        require(static_cast<int>(v) % cfg.data.k == 0, ErrorKind::kArgument,
                "sweep: dimension values must be multiples of k");
      }
    } else {
      require(v >= 0.0 && v < 1.0, ErrorKind::kArgument,
              "sweep: noise values must be in [0, 1)");
    }
  }

  SweepResult result;
  for (double v : values) {
    ExperimentConfig run_cfg = cfg;
    if (axis == SweepAxis::kDimension) {
      run_cfg.defense.K = static_cast<int>(v);
    } else {
      run_cfg.defense.mu = v;
    }
    result.runs.push_back(run_experiment(run_cfg));
  }

  // Summary CSV: one row per value with test utility and per-attack leak.
  std::vector<std::string> attack_names;
  for (const auto& aj : result.runs.front().record["attacks"]) {
    attack_names.push_back(aj["name"].get<std::string>());
  }
  std::ostringstream csv;
  csv << (axis == SweepAxis::kDimension ? "dimension" : "noise")
      << ",test_utility";
  for (const auto& a : attack_names) csv << ",leak_" << a;
  csv << "\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const json& rec = result.runs[i].record;
    csv << values[i] << "," << rec["test"]["utility"].get<double>();
    for (const auto& a : attack_names) {
      csv << ",";
      for (const auto& aj : rec["attacks"]) {
        if (aj["name"] != a) continue;
        if (a == "infer_k") {
          csv << aj["guessed_dimension"].get<int>();
        } else if (aj.contains("leak_auc") && !aj["leak_auc"].is_null()) {
          csv << aj["leak_auc"].get<double>();
        } else if (aj.contains("accuracy")) {
          csv << aj["accuracy"].get<double>();
        }
      }
    }
    csv << "\n";
  }
  result.summary_csv = csv.str();
  return result;
}

InferKTrials run_infer_k_trials(const ExperimentConfig& base, int trials) {
  require(trials >= 1, ErrorKind::kArgument, "infer_k: trials must be >= 1");
  ExperimentConfig cfg = base;
  validate_config(cfg);
  require(cfg.defense_enabled, ErrorKind::kArgument,
          "infer_k: defense must be enabled with a known K");
  cfg.attacks = {"infer_k"};

  InferKTrials out;
  for (int t = 0; t < trials; ++t) {
    ExperimentConfig trial_cfg = cfg;
    trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(t);
    RunOutput run = run_experiment(trial_cfg);
    int guessed = run.record["attacks"][0]["guessed_dimension"].get<int>();
    out.guesses.push_back(guessed);
    out.histogram[guessed]++;
  }
  std::ostringstream csv;
  csv << "guessed_dimension,count,frequency\n";
  for (const auto& [guess, count] : out.histogram) {
    csv << guess << "," << count << ","
        << static_cast<double>(count) / static_cast<double>(trials) << "\n";
  }
  out.csv = csv.str();
  return out;
}

std::string aggregate_records(const std::string& records_dir) {
  require(fs::is_directory(records_dir), ErrorKind::kArgument,
          "report: not a directory: " + records_dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(records_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".json") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());

  std::ostringstream csv;
  csv << "run_id,defense,K,norm_standard,mu,test_metric,test_utility,attack,"
         "leak_metric\n";
  std::size_t valid = 0;
  for (const auto& path : paths) {
    json rec;
    try {
      std::ifstream in(path);
      rec = json::parse(in);
      const std::string run_id = rec.at("run_id").get<std::string>();
      const json& defense = rec.at("config").at("defense");
      const bool defended = defense.at("enabled").get<bool>();
      std::string dk = defended ? std::to_string(defense.at("K").get<int>()) : "";
      std::string dn = defended ? defense.at("norm_standard").get<std::string>() : "";
      std::string dm = defended ? std::to_string(defense.at("mu").get<double>()) : "";
      const std::string metric = rec.at("test").at("metric").get<std::string>();
      const double utility = rec.at("test").at("utility").get<double>();
      for (const auto& aj : rec.at("attacks")) {
        csv << run_id << "," << (defended ? "secdt" : "off") << "," << dk << ","
            << dn << "," << dm << "," << metric << "," << utility << ","
            << aj.at("name").get<std::string>() << ",";
        if (aj.contains("guessed_dimension")) {
          csv << aj.at("guessed_dimension").get<int>();
        } else if (aj.contains("leak_auc") && !aj.at("leak_auc").is_null()) {
          csv << aj.at("leak_auc").get<double>();
        } else if (aj.contains("accuracy")) {
          csv << aj.at("accuracy").get<double>();
        }
        csv << "\n";
      }
      ++valid;
    } catch (const std::exception& e) {
      std::cerr << "report: skipping malformed record " << path << ": "
                << e.what() << "\n";
    }
  }
  require(valid >= 1, ErrorKind::kArgument,
          "report: no valid run records in " + records_dir);
  return csv.str();
}

}  // namespace slsec
