// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared-library surface the CLI is built on: opaque handles,
// status codes, and thread-local error messages.

#include "slsec.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Cfg {
  slsec_config* ptr = slsec_config_new();
  ~Cfg() { slsec_config_free(ptr); }
};

struct Str {
  char* ptr = nullptr;
  ~Str() { slsec_string_free(ptr); }
};

void set_tiny(slsec_config* cfg) {
  REQUIRE(slsec_config_set(cfg, "data.n", "300") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "data.d", "6") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "data.class_weights", "0.8,0.2") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "model.bottom_hidden", "8") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "model.cut_width", "4") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "model.top_hidden", "6") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "train.epochs", "2") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "train.seed", "11") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg, "attacks.run", "norm") == SLSEC_OK);
}

}  // namespace

TEST_CASE("version and error surface") {
  CHECK(std::string(slsec_version()) == "0.1.0");

  Cfg cfg;
  CHECK(slsec_config_set(cfg.ptr, "no.such.key", "1") == SLSEC_ERR_FORMAT);
  CHECK(std::strlen(slsec_last_error()) > 0);

  CHECK(slsec_config_set(nullptr, "a", "b") == SLSEC_ERR_ARGUMENT);
  CHECK(slsec_train(nullptr, nullptr) == SLSEC_ERR_ARGUMENT);
}

TEST_CASE("validation maps precondition failures to status codes") {
  Cfg cfg;
  set_tiny(cfg.ptr);
  REQUIRE(slsec_config_set(cfg.ptr, "defense.enabled", "true") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg.ptr, "defense.K", "3") == SLSEC_OK);
  CHECK(slsec_config_validate(cfg.ptr) == SLSEC_ERR_ARGUMENT);
  CHECK(std::string(slsec_last_error()).find("multiple") != std::string::npos);

  REQUIRE(slsec_config_set(cfg.ptr, "defense.K", "4") == SLSEC_OK);
  CHECK(slsec_config_validate(cfg.ptr) == SLSEC_OK);
}

TEST_CASE("train, inspect, and write a run through the C ABI") {
  Cfg cfg;
  set_tiny(cfg.ptr);

  slsec_run* run = nullptr;
  REQUIRE(slsec_train(cfg.ptr, &run) == SLSEC_OK);
  REQUIRE(run != nullptr);

  CHECK(std::strlen(slsec_run_id(run)) > 0);

  Str record;
  REQUIRE(slsec_run_json(run, &record.ptr) == SLSEC_OK);
  auto rec = nlohmann::json::parse(record.ptr);
  CHECK(rec["attacks"][0]["name"] == "norm");
  CHECK(rec["run_id"].get<std::string>() == slsec_run_id(run));

  std::string dir = (fs::temp_directory_path() / "slsec_capi_out").string();
  fs::remove_all(dir);
  Str path;
  REQUIRE(slsec_run_write(run, dir.c_str(), &path.ptr) == SLSEC_OK);
  CHECK(fs::exists(path.ptr));
  slsec_run_free(run);

  // Aggregate what we just wrote.
  Str csv;
  REQUIRE(slsec_report(dir.c_str(), &csv.ptr) == SLSEC_OK);
  CHECK(std::string(csv.ptr).find("run_id,defense") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config json reflects resolved defaults") {
  Cfg cfg;
  set_tiny(cfg.ptr);
  REQUIRE(slsec_config_set(cfg.ptr, "defense.enabled", "true") == SLSEC_OK);
  Str json_str;
  REQUIRE(slsec_config_json(cfg.ptr, &json_str.ptr) == SLSEC_OK);
  auto j = nlohmann::json::parse(json_str.ptr);
  CHECK(j["defense"]["enabled"] == true);
  CHECK(j["defense"]["K"] == 20);  // resolved 10 * k default
}

TEST_CASE("sweep and infer-k through the C ABI") {
  Cfg cfg;
  set_tiny(cfg.ptr);
  double values[2] = {2.0, 4.0};
  Str summary;
  REQUIRE(slsec_sweep(cfg.ptr, SLSEC_SWEEP_DIMENSION, values, 2, nullptr,
                      &summary.ptr) == SLSEC_OK);
  CHECK(std::string(summary.ptr).rfind("dimension,", 0) == 0);

  double bad[1] = {3.0};
  CHECK(slsec_sweep(cfg.ptr, SLSEC_SWEEP_DIMENSION, bad, 1, nullptr, nullptr) ==
        SLSEC_ERR_ARGUMENT);

  REQUIRE(slsec_config_set(cfg.ptr, "defense.enabled", "true") == SLSEC_OK);
  REQUIRE(slsec_config_set(cfg.ptr, "defense.K", "4") == SLSEC_OK);
  Str hist;
  REQUIRE(slsec_infer_k(cfg.ptr, 1, &hist.ptr) == SLSEC_OK);
  CHECK(std::string(hist.ptr).rfind("guessed_dimension,", 0) == 0);
}

TEST_CASE("report on a missing directory fails cleanly") {
  Str csv;
  CHECK(slsec_report("/nonexistent/slsec/records", &csv.ptr) ==
        SLSEC_ERR_ARGUMENT);
}
