// intentbench: command-line front end for the decoding benchmark pipeline.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numerical divergence.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "intentbench/errors.hpp"
#include "intentbench/pipeline.hpp"

namespace {

using namespace intentbench;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct GlobalFlags {
  std::string config_path;
  std::string out;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const GlobalFlags& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (!g.out.empty()) cfg.out_dir = g.out;
  if (g.jobs) cfg.jobs = *g.jobs;
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline benchmark for decoding driving commands from EEG at multiple prediction horizons"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON run configuration (defaults apply to missing keys)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (overrides out_dir)");
  app.add_option("--jobs", g.jobs, "Sessions/horizons processed concurrently")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Global seed from which every stage seed is derived");

  auto* simulate = app.add_subcommand("simulate", "Write synthetic sessions to <out>/sessions");

  std::string session_dir;
  auto* validate = app.add_subcommand("validate", "Check a session directory and print a JSON report");
  validate->add_option("session", session_dir, "Session directory")->required()->check(CLI::ExistingDirectory);

  auto* preprocess = app.add_subcommand("preprocess", "Filter, re-reference and clean one session into <out>");
  preprocess->add_option("session", session_dir, "Session directory")->required()->check(CLI::ExistingDirectory);

  auto* label = app.add_subcommand("label", "Write labels_<ms>.csv for every configured horizon into <out>");
  label->add_option("session", session_dir, "Session directory")->required()->check(CLI::ExistingDirectory);

  std::string labels_csv;
  int horizon = 0;
  auto* split = app.add_subcommand("split", "Split and window one horizon into <out>");
  split->add_option("session", session_dir, "Preprocessed session directory")->required()->check(CLI::ExistingDirectory);
  split->add_option("--labels", labels_csv, "labels_<ms>.csv from the label stage")->required()->check(CLI::ExistingFile);
  split->add_option("--horizon", horizon, "Horizon in ms")->required();

  std::string stem, model = "shallow";
  auto* train = app.add_subcommand("train", "Train one model on a train window tensor; checkpoint into <out>");
  train->add_option("windows", stem, "Train tensor stem (path without .f32/.json)")->required();
  train->add_option("--model", model, "linear or shallow");

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a test window tensor");
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("windows", stem, "Test tensor stem")->required();

  std::vector<std::string> report_inputs;
  auto* report = app.add_subcommand("report", "Aggregate eval JSON files (or directories of them) into <out>");
  report->add_option("inputs", report_inputs, "Eval JSON files or directories")->required();

  auto* run_all = app.add_subcommand("run-all", "simulate -> preprocess -> label -> split -> train -> eval -> report");

  bool print_defaults = false;
  auto* config = app.add_subcommand("config", "Show or check the run configuration");
  config->add_flag("--print-defaults", print_defaults, "Print the default configuration as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (config->parsed()) {
      // with --print-defaults, show pristine defaults; otherwise the resolved config
      const RunConfig cfg = print_defaults ? RunConfig{} : resolve_config(g);
      std::cout << to_json(cfg).dump(2) << '\n';
      return 0;
    }
    const RunConfig cfg = resolve_config(g);
    const fs::path out = cfg.out_dir;

    if (simulate->parsed()) {
      for (const auto& dir : cmd_simulate(cfg, out)) std::cout << dir.string() << '\n';
    } else if (validate->parsed()) {
      const auto j = cmd_validate(session_dir);
      std::cout << j.dump(2) << '\n';
      return j.at("ok").get<bool>() ? 0 : kExitData;
    } else if (preprocess->parsed()) {
      cmd_preprocess(session_dir, cfg, out);
      std::cout << out.string() << '\n';
    } else if (label->parsed()) {
      for (const auto& f : cmd_label(session_dir, cfg, out)) std::cout << f.string() << '\n';
    } else if (split->parsed()) {
      const auto [train_stem, test_stem] = cmd_split(session_dir, labels_csv, horizon, cfg, out);
      std::cout << train_stem.string() << '\n' << test_stem.string() << '\n';
    } else if (train->parsed()) {
      std::cout << cmd_train(stem, parse_model_kind(model), cfg, out).string() << '\n';
    } else if (eval->parsed()) {
      const RunRecord r = cmd_eval(checkpoint, stem, out);
      std::cout << to_json(r).dump(2) << '\n';
    } else if (report->parsed()) {
      std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
      const BenchmarkReport rep = cmd_report(inputs, out);
      std::cout << "reported " << rep.runs.size() << " runs into " << out.string() << '\n';
    } else if (run_all->parsed()) {
      const BenchmarkReport rep = cmd_run_all(cfg, out);
      std::cout << metrics_summary_csv(rep);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
