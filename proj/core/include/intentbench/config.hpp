#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentbench/ingestion.hpp"
#include "intentbench/labelling.hpp"
#include "intentbench/models.hpp"
#include "intentbench/preprocess.hpp"
#include "intentbench/split.hpp"
#include "intentbench/synthgen.hpp"
#include "intentbench/train.hpp"

namespace intentbench {

/// Everything a pipeline run depends on. Per-stage seeds are derived from
/// `seed` and the run context, so one number pins the whole run.
struct RunConfig {
  std::uint64_t seed = 20240501;
  std::string out_dir = "out";
  int jobs = 1;

  /// Simulate `n_sessions` synthetic sessions, or read `sessions` from disk.
  bool simulate = true;
  int n_sessions = 3;
  std::vector<std::string> sessions;

  std::vector<int> horizons_ms{kHorizonsMs.begin(), kHorizonsMs.end()};
  std::vector<std::string> models = {"linear", "shallow"};

  AlignmentConfig alignment;
  LabelRule label_rule;
  FilterSpec filter;
  BadChannelCriteria bad_channels;
  PreprocessOptions preprocess;
  SplitConfig split;
  TrainConfig train;
  ShallowConvNetSpec shallow;
  SynthConfig synth;

  /// Validates every sub-config and cross-field constraint. Throws ConfigError.
  void validate() const;
  [[nodiscard]] std::vector<ModelKind> model_kinds() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys take their defaults; unknown keys and wrong types throw
/// ConfigError naming the offending path. Does not call validate().
RunConfig run_config_from_json(const nlohmann::json& j);
/// Reads and validates a config file.
RunConfig load_run_config(const std::string& path);

/// Seed for one pipeline step: a hash of the global seed and a context
/// string such as "train/s001/shallow/300".
std::uint64_t derive_seed(std::uint64_t global, std::string_view context);

}  // namespace intentbench
