// SPDX-License-Identifier: Apache-2.0
//
// slsec command-line driver. Talks to the core exclusively through the
// extern-C API in slsec.h; everything here is argv plumbing and printing.
//
//   slsec train   --config exp.ini --defense secdt --seed 7
//   slsec sweep   --axis dimension --values 2,4,8,16,32
//   slsec infer-k --trials 20
//   slsec report  --records ./records

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slsec.h"

namespace {

// Exit codes: 0 success, 2 validation/config failure, 3 training abort,
// 1 anything else.
int exit_code_for(slsec_status st) {
  switch (st) {
    case SLSEC_OK:
      return 0;
    case SLSEC_ERR_ARGUMENT:
    case SLSEC_ERR_FORMAT:
    case SLSEC_ERR_UNSUPPORTED:
      return 2;
    case SLSEC_ERR_TRAINING:
      return 3;
    default:
      return 1;
  }
}

int fail(slsec_status st) {
  std::fprintf(stderr, "slsec: error: %s\n", slsec_last_error());
  return exit_code_for(st);
}

struct ConfigHandle {
  slsec_config* ptr = slsec_config_new();
  ~ConfigHandle() { slsec_config_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { slsec_string_free(ptr); }
};

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::string defense;  // "", "off", "secdt"
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::uint32_t epochs = 0;
  bool epochs_given = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "Config file (key = value sections)");
  cmd->add_option("--set", flags.sets,
                  "Override a config entry, e.g. --set data.n=5000 (repeatable)");
  cmd->add_option("--defense", flags.defense, "off or secdt")
      ->check(CLI::IsMember({"off", "secdt"}));
  cmd->add_option("--out", flags.out_dir, "Output directory for records");
  cmd->add_option("--seed", flags.seed, "Run seed")
      ->each([&flags](const std::string&) { flags.seed_given = true; });
  cmd->add_option("--epochs", flags.epochs, "Training epochs")
      ->each([&flags](const std::string&) { flags.epochs_given = true; });
}

// File first, then --set overrides in order, then the dedicated flags.
slsec_status build_config(const CommonFlags& flags, slsec_config* cfg) {
  if (!flags.config_file.empty()) {
    if (auto st = slsec_config_load_file(cfg, flags.config_file.c_str());
        st != SLSEC_OK)
      return st;
  }
  for (const std::string& kv : flags.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "slsec: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return SLSEC_ERR_ARGUMENT;
    }
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (auto st = slsec_config_set(cfg, key.c_str(), value.c_str());
        st != SLSEC_OK)
      return st;
  }
  if (!flags.defense.empty()) {
    if (auto st = slsec_config_set(cfg, "defense.enabled",
                                   flags.defense == "secdt" ? "true" : "false");
        st != SLSEC_OK)
      return st;
  }
  if (flags.seed_given) {
    if (auto st = slsec_config_set(cfg, "train.seed",
                                   std::to_string(flags.seed).c_str());
        st != SLSEC_OK)
      return st;
  }
  if (flags.epochs_given) {
    if (auto st = slsec_config_set(cfg, "train.epochs",
                                   std::to_string(flags.epochs).c_str());
        st != SLSEC_OK)
      return st;
  }
  if (!flags.out_dir.empty()) {
    if (auto st = slsec_config_set(cfg, "output.dir", flags.out_dir.c_str());
        st != SLSEC_OK)
      return st;
  }
  return SLSEC_OK;
}

std::string output_dir_of(const slsec_config* cfg, const CommonFlags& flags) {
  if (!flags.out_dir.empty()) return flags.out_dir;
  (void)cfg;
  const char* env = std::getenv("SLSEC_OUT_DIR");
  return env && *env ? env : "records";
}

void print_run_summary(const std::string& record_json) {
  auto rec = nlohmann::json::parse(record_json);
  std::printf("run %s\n", rec["run_id"].get<std::string>().c_str());
  std::printf("  final train loss  %.4f\n", rec["train"]["final_loss"].get<double>());
  std::printf("  test %s          %.4f\n",
              rec["test"]["metric"].get<std::string>().c_str(),
              rec["test"]["utility"].get<double>());
  for (const auto& attack : rec["attacks"]) {
    std::string name = attack["name"].get<std::string>();
    if (attack.contains("guessed_dimension")) {
      std::printf("  attack %-17s guessed K = %d (true %d)\n", name.c_str(),
                  attack["guessed_dimension"].get<int>(),
                  attack["true_dimension"].get<int>());
    } else if (attack.contains("leak_auc") && !attack["leak_auc"].is_null()) {
      std::printf("  attack %-17s leak AUC = %.4f\n", name.c_str(),
                  attack["leak_auc"].get<double>());
    } else if (attack.contains("accuracy")) {
      std::printf("  attack %-17s accuracy = %.4f\n", name.c_str(),
                  attack["accuracy"].get<double>());
    }
  }
}

int write_text(const std::string& path, const char* content) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) {
    std::fprintf(stderr, "slsec: cannot write %s\n", path.c_str());
    return 1;
  }
  std::fputs(content, f);
  std::fclose(f);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slsec: split-learning label-privacy laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", slsec_version());

  CommonFlags train_flags, sweep_flags, inferk_flags;

  auto* train_cmd = app.add_subcommand("train", "Train, attack, evaluate, record");
  add_common_flags(train_cmd, train_flags);
  bool train_quiet = false;
  train_cmd->add_flag("--quiet", train_quiet, "Suppress the run summary");

  auto* sweep_cmd = app.add_subcommand("sweep", "One run per axis value, shared seed");
  add_common_flags(sweep_cmd, sweep_flags);
  std::string sweep_axis = "dimension";
  std::string sweep_values;
  sweep_cmd->add_option("--axis", sweep_axis, "dimension or noise")
      ->check(CLI::IsMember({"dimension", "noise"}));
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated axis values")
      ->required();

  auto* inferk_cmd =
      app.add_subcommand("infer-k", "Repeated K-inference trials over seeds");
  add_common_flags(inferk_cmd, inferk_flags);
  int trials = 20;
  inferk_cmd->add_option("--trials", trials, "Number of trials");

  auto* report_cmd = app.add_subcommand("report", "Aggregate records into a CSV");
  std::string records_dir;
  std::string report_out;
  report_cmd->add_option("--records", records_dir, "Directory of run records");
  report_cmd->add_option("--out", report_out, "Output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (train_cmd->parsed()) {
    ConfigHandle cfg;
    if (auto st = build_config(train_flags, cfg.ptr); st != SLSEC_OK) return fail(st);
    if (auto st = slsec_config_validate(cfg.ptr); st != SLSEC_OK) return fail(st);
    slsec_run* run = nullptr;
    if (auto st = slsec_train(cfg.ptr, &run); st != SLSEC_OK) return fail(st);
    std::unique_ptr<slsec_run, decltype(&slsec_run_free)> run_guard(
        run, &slsec_run_free);
    std::string out_dir = output_dir_of(cfg.ptr, train_flags);
    OwnedString path;
    if (auto st = slsec_run_write(run, out_dir.c_str(), &path.ptr); st != SLSEC_OK)
      return fail(st);
    OwnedString record;
    if (auto st = slsec_run_json(run, &record.ptr); st != SLSEC_OK) return fail(st);
    if (!train_quiet) print_run_summary(record.ptr);
    std::printf("record written to %s\n", path.ptr);
    return 0;
  }

  if (sweep_cmd->parsed()) {
    ConfigHandle cfg;
    if (auto st = build_config(sweep_flags, cfg.ptr); st != SLSEC_OK) return fail(st);
    std::vector<double> values;
    for (std::size_t pos = 0; pos < sweep_values.size();) {
      auto comma = sweep_values.find(',', pos);
      std::string tok = sweep_values.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        std::fprintf(stderr, "slsec: bad sweep value '%s'\n", tok.c_str());
        return 2;
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    std::string out_dir = output_dir_of(cfg.ptr, sweep_flags);
    OwnedString summary;
    auto st = slsec_sweep(cfg.ptr,
                          sweep_axis == "dimension" ? SLSEC_SWEEP_DIMENSION
                                                    : SLSEC_SWEEP_NOISE,
                          values.data(), values.size(), out_dir.c_str(),
                          &summary.ptr);
    if (st != SLSEC_OK) return fail(st);
    std::string csv_path = out_dir + "/sweep_" + sweep_axis + ".csv";
    if (int rc = write_text(csv_path, summary.ptr); rc != 0) return rc;
    std::printf("%s", summary.ptr);
    std::printf("sweep summary written to %s\n", csv_path.c_str());
    return 0;
  }

  if (inferk_cmd->parsed()) {
    ConfigHandle cfg;
    if (auto st = build_config(inferk_flags, cfg.ptr); st != SLSEC_OK)
      return fail(st);
    OwnedString hist;
    if (auto st = slsec_infer_k(cfg.ptr, trials, &hist.ptr); st != SLSEC_OK)
      return fail(st);
    std::string out_dir = output_dir_of(cfg.ptr, inferk_flags);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::string csv_path = out_dir + "/infer_k_histogram.csv";
    if (int rc = write_text(csv_path, hist.ptr); rc != 0) return rc;
    std::printf("%s", hist.ptr);
    std::printf("histogram written to %s\n", csv_path.c_str());
    return 0;
  }

  if (report_cmd->parsed()) {
    if (records_dir.empty()) {
      const char* env = std::getenv("SLSEC_OUT_DIR");
      records_dir = env && *env ? env : "records";
    }
    OwnedString csv;
    if (auto st = slsec_report(records_dir.c_str(), &csv.ptr); st != SLSEC_OK)
      return fail(st);
    if (report_out.empty()) report_out = records_dir + "/report.csv";
    if (int rc = write_text(report_out, csv.ptr); rc != 0) return rc;
    std::printf("report written to %s\n", report_out.c_str());
    return 0;
  }

  return 0;
}
