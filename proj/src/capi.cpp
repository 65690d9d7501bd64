// SPDX-License-Identifier: Apache-2.0
//
// extern-C shim over the C++ core. Exceptions stop here: every entry point
// catches, records a thread-local message, and returns a status code.

#include "slsec.h"

#include <cstring>
#include <new>
#include <string>

#include "slsec/error.hpp"
#include "slsec/harness.hpp"

using namespace slsec;

struct slsec_config {
  ExperimentConfig cfg;
};

struct slsec_run {
  RunOutput output;
};

namespace {

thread_local std::string g_last_error;

slsec_status status_from(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument: return SLSEC_ERR_ARGUMENT;
    case ErrorKind::kDegenerate: return SLSEC_ERR_DEGENERATE;
    case ErrorKind::kConvergence: return SLSEC_ERR_CONVERGENCE;
    case ErrorKind::kFormat: return SLSEC_ERR_FORMAT;
    case ErrorKind::kProtocol: return SLSEC_ERR_PROTOCOL;
    case ErrorKind::kTraining: return SLSEC_ERR_TRAINING;
    case ErrorKind::kUnsupported: return SLSEC_ERR_UNSUPPORTED;
    case ErrorKind::kIo: return SLSEC_ERR_IO;
  }
  return SLSEC_ERR_INTERNAL;
}

template <typename Fn>
slsec_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SLSEC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_from(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SLSEC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SLSEC_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new (std::nothrow) char[s.size() + 1];
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

slsec_status out_string(const std::string& s, char** out) {
  if (!out) {
    g_last_error = "output pointer is NULL";
    return SLSEC_ERR_ARGUMENT;
  }
  *out = dup_string(s);
  if (!*out) {
    g_last_error = "allocation failed";
    return SLSEC_ERR_INTERNAL;
  }
  return SLSEC_OK;
}

}  // namespace

extern "C" {

const char* slsec_version(void) { return kToolVersion; }

const char* slsec_last_error(void) { return g_last_error.c_str(); }

void slsec_string_free(char* s) { delete[] s; }

slsec_config* slsec_config_new(void) {
  return new (std::nothrow) slsec_config{};
}

void slsec_config_free(slsec_config* cfg) { delete cfg; }

slsec_status slsec_config_load_file(slsec_config* cfg, const char* path) {
  if (!cfg || !path) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  return guarded([&] { cfg->cfg = parse_config_file(path); });
}

slsec_status slsec_config_set(slsec_config* cfg, const char* key,
                              const char* value) {
  if (!cfg || !key || !value) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  return guarded([&] { apply_override(cfg->cfg, key, value); });
}

slsec_status slsec_config_validate(slsec_config* cfg) {
  if (!cfg) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  return guarded([&] { validate_config(cfg->cfg); });
}

slsec_status slsec_config_json(const slsec_config* cfg, char** out_json) {
  if (!cfg) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  std::string json;
  slsec_status st = guarded([&] {
    ExperimentConfig copy = cfg->cfg;
    validate_config(copy);
    json = config_to_json(copy).dump(2);
  });
  if (st != SLSEC_OK) return st;
  return out_string(json, out_json);
}

slsec_status slsec_train(const slsec_config* cfg, slsec_run** out_run) {
  if (!cfg || !out_run) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  return guarded([&] {
    auto run = std::make_unique<slsec_run>();
    run->output = run_experiment(cfg->cfg);
    *out_run = run.release();
  });
}

void slsec_run_free(slsec_run* run) { delete run; }

const char* slsec_run_id(const slsec_run* run) {
  return run ? run->output.run_id.c_str() : "";
}

slsec_status slsec_run_json(const slsec_run* run, char** out_json) {
  if (!run) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  return out_string(run->output.record.dump(2), out_json);
}

slsec_status slsec_run_write(const slsec_run* run, const char* out_dir,
                             char** out_record_path) {
  if (!run || !out_dir) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  std::string path;
  slsec_status st = guarded([&] { path = write_run(run->output, out_dir); });
  if (st != SLSEC_OK) return st;
  if (out_record_path) return out_string(path, out_record_path);
  return SLSEC_OK;
}

slsec_status slsec_sweep(const slsec_config* cfg, slsec_sweep_axis axis,
                         const double* values, size_t n_values,
                         const char* out_dir, char** out_summary_csv) {
  if (!cfg || (!values && n_values > 0)) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  std::string summary;
  slsec_status st = guarded([&] {
    std::vector<double> vals(values, values + n_values);
    SweepResult result = run_sweep(
        cfg->cfg,
        axis == SLSEC_SWEEP_DIMENSION ? SweepAxis::kDimension : SweepAxis::kNoise,
        vals);
    if (out_dir) {
      for (const RunOutput& run : result.runs) write_run(run, out_dir);
    }
    summary = result.summary_csv;
  });
  if (st != SLSEC_OK) return st;
  if (out_summary_csv) return out_string(summary, out_summary_csv);
  return SLSEC_OK;
}

slsec_status slsec_infer_k(const slsec_config* cfg, int trials,
                           char** out_histogram_csv) {
  if (!cfg) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  std::string csv;
  slsec_status st =
      guarded([&] { csv = run_infer_k_trials(cfg->cfg, trials).csv; });
  if (st != SLSEC_OK) return st;
  if (out_histogram_csv) return out_string(csv, out_histogram_csv);
  return SLSEC_OK;
}

slsec_status slsec_report(const char* records_dir, char** out_csv) {
  if (!records_dir) {
    g_last_error = "NULL argument";
    return SLSEC_ERR_ARGUMENT;
  }
  std::string csv;
  slsec_status st = guarded([&] { csv = aggregate_records(records_dir); });
  if (st != SLSEC_OK) return st;
  if (out_csv) return out_string(csv, out_csv);
  return SLSEC_OK;
}

}  // extern "C"
