#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentbench/config.hpp"
#include "intentbench/report.hpp"

namespace intentbench {

namespace fs = std::filesystem;

// File-based pipeline stages. Every stage reads its inputs from disk and
// writes self-describing outputs, and run-all is nothing but these stages in
// sequence, so running them one by one yields byte-identical results.
//
// run-all layout under the output directory:
//   sessions/<sid>/                  simulated raw sessions
//   <sid>/preprocessed/              cleaned session + preprocess_report.json
//   <sid>/labels/labels_<d>.csv
//   <sid>/windows/d<d>_{train,test}.{f32,json}
//   <sid>/models/<model>_d<d>.ckpt, <model>_d<d>_loss.csv
//   <sid>/eval/<model>_d<d>.json
//   report/

/// Writes cfg.n_sessions synthetic sessions to out/sessions/s000, s001, ...
/// and returns their directories.
std::vector<fs::path> cmd_simulate(const RunConfig& cfg, const fs::path& out);

/// Loads a session and returns its validation report as JSON.
nlohmann::json cmd_validate(const fs::path& session_dir);

/// Cleans a session; writes a loadable session directory plus
/// preprocess_report.json into `out`.
void cmd_preprocess(const fs::path& session_dir, const RunConfig& cfg, const fs::path& out);

/// Writes labels_<d>.csv into `out` for every configured horizon.
std::vector<fs::path> cmd_label(const fs::path& session_dir, const RunConfig& cfg, const fs::path& out);

/// Splits and windows one horizon; returns the train and test stems.
std::pair<fs::path, fs::path> cmd_split(const fs::path& session_dir, const fs::path& labels_csv,
                                        int delta_ms, const RunConfig& cfg, const fs::path& out);

/// Trains one model on a train tensor; returns the checkpoint path.
fs::path cmd_train(const fs::path& train_stem, ModelKind model, const RunConfig& cfg, const fs::path& out);

/// Evaluates a checkpoint on a test tensor; writes <model>_d<d>.json.
RunRecord cmd_eval(const fs::path& checkpoint, const fs::path& test_stem, const fs::path& out);

/// Collects eval JSON files (or directories searched recursively for them)
/// and emits the benchmark report into `out`.
BenchmarkReport cmd_report(const std::vector<fs::path>& eval_inputs, const fs::path& out);

/// The whole pipeline with up to cfg.jobs sessions in flight. A failing
/// session gets an INCOMPLETE marker naming the stage; the error is then
/// rethrown with its original type.
BenchmarkReport cmd_run_all(const RunConfig& cfg, const fs::path& out);

/// Session id used for output directories and seed derivation.
std::string session_id_of(const fs::path& session_dir);

RunRecord run_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunRecord& r);

}  // namespace intentbench
