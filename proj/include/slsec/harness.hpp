// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: config parsing/validation, single runs (train +
// attacks + evaluation), axis sweeps, repeated K-inference trials, and
// record aggregation. Run records are one JSON document per run under a
// content-addressed filename, so identical configs rerun idempotently.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slsec/attacks.hpp"
#include "slsec/dataset.hpp"
#include "slsec/protocol.hpp"

namespace slsec {

inline constexpr const char* kToolVersion = "0.1.0";
// Default output directory can also come from this environment variable.
inline constexpr const char* kOutputDirEnv = "SLSEC_OUT_DIR";

struct DataSpec {
  enum class Kind { kSynthetic, kCsv, kIdx };
  Kind kind = Kind::kSynthetic;

  // synthetic
  std::size_t n = 10000;
  std::size_t d = 32;
  int k = 2;
  std::vector<double> class_weights;  // empty: {0.95, 0.05} when k == 2, else uniform
  double separation = 6.0;

  // csv
  std::string csv_path;
  std::string label_column;

  // idx
  std::string idx_images;
  std::string idx_labels;

  double test_fraction = 0.2;
};

struct ModelSpec {
  std::size_t bottom_hidden = 64;
  std::size_t cut_width = 16;
  std::size_t top_hidden = 32;
};

struct ExperimentConfig {
  DataSpec data;
  ModelSpec model;

  std::uint32_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 0.1;
  std::string schedule = "constant";  // constant | inverse_time
  std::uint64_t seed = 42;

  bool defense_enabled = false;
  DefenseConfig defense;  // defense.K == 0 resolves to 10*k at validation

  std::vector<std::string> attacks;  // norm, direction, spectral,
                                     // model_completion, infer_k
  std::size_t aux_per_class = 10;
  std::size_t direction_reference = 512;
  std::string spectral_source = "embeddings";  // embeddings | gradients
  int infer_k_max = 0;                         // 0 resolves to 2*K

  std::string output_dir;   // empty: $SLSEC_OUT_DIR or "records"
  bool output_trace = false;  // also write the tapped exchange as .sltrace
};

// key=value sections ([data], [model], [train], [defense], [attacks],
// [output]); '#' starts a comment. Unknown keys raise kFormat.
ExperimentConfig parse_config_file(const std::string& path);
// Apply one "section.key=value" override (CLI flags win over the file).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);
// Checks every module precondition up front; raises kArgument. Also resolves
// defaulted fields (class weights, defense.K, output dir).
void validate_config(ExperimentConfig& cfg);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
// FNV-1a hash (hex) of the canonical config JSON, seed included.
std::string config_run_id(const ExperimentConfig& cfg);

struct RunOutput {
  std::string run_id;
  nlohmann::json record;
  std::vector<AttackReport> attack_reports;
  SplitModel model;                   // for checkpointing
  std::optional<MappingPools> pools;  // sidecar when defended
  std::vector<Message> trace;         // tapped exchange (when requested)
};

// Train (defended or not), run the configured attacks against the tap,
// evaluate test utility, and assemble the run record.
RunOutput run_experiment(const ExperimentConfig& cfg);

// Writes <dir>/run_<id>.json plus one CSV per attack, the bottom-model
// checkpoint, the pools sidecar (defended runs), and the .sltrace exchange
// when it was requested; all atomically (temp + rename). Returns the record
// path.
std::string write_run(const RunOutput& out, const std::string& dir);

enum class SweepAxis { kDimension, kNoise };

struct SweepResult {
  std::vector<RunOutput> runs;
  std::string summary_csv;  // (value, test utility, per-attack leak)
};

// One run per value with a shared seed; all values are validated before the
// first run starts.
SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::vector<double>& values);

struct InferKTrials {
  std::map<int, int> histogram;  // guessed dimension -> count
  std::vector<int> guesses;      // per trial
  std::string csv;               // (guess, count, frequency)
};

// Repeats train + infer_k_attack over `trials` derived seeds.
InferKTrials run_infer_k_trials(const ExperimentConfig& cfg, int trials);

// Aggregates every readable run_*.json under records_dir into a plot-ready
// CSV: (run_id, defense, K, norm_standard, mu, test_metric, test_utility,
// attack, leak_metric). Malformed records are skipped with a warning on
// stderr; raises kArgument when no valid record exists.
std::string aggregate_records(const std::string& records_dir);

}  // namespace slsec
