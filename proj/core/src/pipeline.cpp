#include "intentbench/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <set>
#include <thread>

#include "intentbench/errors.hpp"
#include "io_util.hpp"

namespace intentbench {

using nlohmann::json;

namespace {

/// Runs fn and re-throws failures with the stage name and file prefixed,
/// keeping the exception type (which decides the exit code).
template <typename Fn>
auto in_stage(std::string_view stage, const fs::path& file, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = "[" + std::string(stage) + "] " + file.string() + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DivergenceError& e) {
    throw DivergenceError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const json::exception& e) {
    throw DataError(prefix + e.what());
  } catch (const fs::filesystem_error& e) {
    throw DataError(prefix + e.what());
  }
}

std::string horizon_tag(int delta_ms) { return "d" + std::to_string(delta_ms); }

void write_json(const fs::path& path, const json& j) { detail::write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) { return json::parse(detail::read_text_file(path)); }

/// Runs task(i) for i in [0, n) on up to `jobs` threads and returns the
/// failure of each task (null when it succeeded).
std::vector<std::exception_ptr> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
  if (n_threads <= 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return errors;
}

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

json metric_set_json(const MetricSet& m) {
  json per_class = json::object();
  for (auto l : kAllLabels) {
    const auto k = static_cast<std::size_t>(label_code(l));
    per_class[std::string(label_name(l))] = {{"precision", m.per_class[k].precision},
                                             {"recall", m.per_class[k].recall},
                                             {"f1", m.per_class[k].f1},
                                             {"present", m.present[k]}};
  }
  return {{"accuracy", m.accuracy},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"averaging", "macro over classes present in the truth"},
          {"per_class", per_class}};
}

MetricSet metric_set_from_json(const json& j) {
  MetricSet m;
  m.accuracy = j.at("accuracy").get<double>();
  m.macro_precision = j.at("macro_precision").get<double>();
  m.macro_recall = j.at("macro_recall").get<double>();
  m.macro_f1 = j.at("macro_f1").get<double>();
  for (auto l : kAllLabels) {
    const auto k = static_cast<std::size_t>(label_code(l));
    const auto& pc = j.at("per_class").at(std::string(label_name(l)));
    m.per_class[k] = {pc.at("precision").get<double>(), pc.at("recall").get<double>(), pc.at("f1").get<double>()};
    m.present[k] = pc.at("present").get<bool>();
  }
  return m;
}

}  // namespace

json to_json(const RunRecord& r) {
  json cm = json::array();
  for (const auto& row : r.confusion.counts) cm.push_back(row);
  return {{"kind", "eval"},      {"model", r.model},
          {"delta_ms", r.horizon_ms}, {"session_id", r.run_id},
          {"n_windows", r.confusion.total()}, {"metrics", metric_set_json(r.metrics)},
          {"confusion", cm}};
}

RunRecord run_record_from_json(const json& j) {
  if (j.value("kind", "") != "eval") throw DataError("not an eval record");
  RunRecord r;
  r.model = j.at("model").get<std::string>();
  r.horizon_ms = j.at("delta_ms").get<int>();
  r.run_id = j.at("session_id").get<std::string>();
  r.metrics = metric_set_from_json(j.at("metrics"));
  const auto& cm = j.at("confusion");
  if (cm.size() != kNumClasses) throw DataError("confusion matrix must be 5x5");
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (cm[i].size() != kNumClasses) throw DataError("confusion matrix must be 5x5");
    for (std::size_t k = 0; k < kNumClasses; ++k) r.confusion.counts[i][k] = cm[i][k].get<std::uint64_t>();
  }
  return r;
}

std::string session_id_of(const fs::path& session_dir) {
  return in_stage("session", session_dir / "manifest.json", [&] {
    const json j = read_json(session_dir / "manifest.json");
    const std::string sid = j.at("session_id").get<std::string>();
    if (sid.empty() || sid.find_first_of("/\\") != std::string::npos || sid == "." || sid == "..") {
      throw DataError("session_id '" + sid + "' cannot name a directory");
    }
    return sid;
  });
}

std::vector<fs::path> cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  std::vector<fs::path> dirs;
  for (int i = 0; i < cfg.n_sessions; ++i) {
    char sid[16];
    std::snprintf(sid, sizeof sid, "s%03d", i);
    const fs::path dir = out / "sessions" / sid;
    in_stage("simulate", dir, [&] {
      SynthConfig sc = cfg.synth;
      sc.rng_seed = derive_seed(cfg.seed, std::string("synth/") + sid);
      sc.validate(cfg.split.n_chunks);
      write_synth_session(generate_session(sc, sid), dir);
    });
    dirs.push_back(dir);
  }
  return dirs;
}

json cmd_validate(const fs::path& session_dir) {
  return in_stage("validate", session_dir, [&] {
    const SessionDir s = load_session(session_dir);
    const ValidationReport r = validate_recording(s.eeg);
    json nf = json::array();
    for (const auto& v : r.non_finite) nf.push_back({{"channel", v.channel}, {"sample", v.sample}});
    return json{{"session_id", s.manifest.session_id},
                {"n_channels", s.eeg.n_channels()},
                {"n_samples", s.eeg.n_samples()},
                {"n_joystick", s.joystick.size()},
                {"ok", r.empty()},
                {"monotonicity_violations", r.monotonicity_violations},
                {"non_finite", nf},
                {"structural", r.structural},
                {"median_gap_ns", r.median_gap_ns ? json(*r.median_gap_ns) : json(nullptr)},
                {"nominal_gap_ns", r.nominal_gap_ns},
                {"rate_drift", r.rate_drift}};
  });
}

void cmd_preprocess(const fs::path& session_dir, const RunConfig& cfg, const fs::path& out) {
  in_stage("preprocess", session_dir, [&] {
    SessionDir s = load_session(session_dir);
    cfg.filter.validate(s.eeg.sample_rate_hz);
    auto [clean, report] = preprocess_session(s.eeg, cfg.filter, cfg.bad_channels, cfg.preprocess);
    s.eeg = std::move(clean);
    write_session(s, out);
    json j = to_json(report);
    j["session_id"] = s.manifest.session_id;
    write_json(out / "preprocess_report.json", j);
  });
}

std::vector<fs::path> cmd_label(const fs::path& session_dir, const RunConfig& cfg, const fs::path& out) {
  return in_stage("label", session_dir, [&] {
    const SessionDir s = load_session(session_dir);
    std::vector<fs::path> files;
    for (int h : cfg.horizons_ms) {
      const auto labels = label_at_horizon(s.eeg.timestamps, s.joystick, cfg.label_rule, Horizon(h), cfg.alignment);
      const fs::path path = out / ("labels_" + std::to_string(h) + ".csv");
      write_labels_csv(labels, path);
      files.push_back(path);
    }
    return files;
  });
}

std::pair<fs::path, fs::path> cmd_split(const fs::path& session_dir, const fs::path& labels_csv, int delta_ms,
                                        const RunConfig& cfg, const fs::path& out) {
  return in_stage("split", labels_csv, [&] {
    const Horizon h(delta_ms);
    const SessionDir s = load_session(session_dir);
    const std::string sid = s.manifest.session_id;
    const auto labels = read_labels_csv(labels_csv, s.eeg.timestamps, h.ms());
    SplitConfig sc = cfg.split;
    sc.rng_seed = derive_seed(cfg.seed, "split/" + sid + "/" + std::to_string(h.ms()));
    const SplitDataset ds =
        build_split(s.eeg, labels, sc, BuildSplitOptions{.zscore_with_train_stats = !cfg.preprocess.zscore_per_session});
    if (ds.train.empty() || ds.test.empty()) {
      throw DataError("split produced " + std::to_string(ds.train.size()) + " train and " +
                      std::to_string(ds.test.size()) + " test windows; need at least one of each");
    }
    json channels = json::array();
    for (const auto& c : s.eeg.channels) channels.push_back(c.name);
    json absent = json::array();
    for (auto l : ds.absent_classes) absent.push_back(label_name(l));

    WindowTensor train = to_window_tensor(ds.train, h.ms(), Partition::Train);
    WindowTensor test = to_window_tensor(ds.test, h.ms(), Partition::Test);
    for (WindowTensor* w : {&train, &test}) {
      w->extra["session_id"] = sid;
      w->extra["channels"] = channels;
      w->extra["absent_classes"] = absent;
      w->extra["train_counts_before_oversampling"] = ds.train_counts_before_oversampling;
      w->extra["split_seed"] = sc.rng_seed;
    }
    const fs::path train_stem = out / (horizon_tag(h.ms()) + "_train");
    const fs::path test_stem = out / (horizon_tag(h.ms()) + "_test");
    write_window_tensor(train, train_stem);
    write_window_tensor(test, test_stem);
    return std::pair{train_stem, test_stem};
  });
}

fs::path cmd_train(const fs::path& train_stem, ModelKind model, const RunConfig& cfg, const fs::path& out) {
  return in_stage("train", train_stem.string() + ".f32", [&] {
    const WindowTensor w = read_window_tensor(train_stem);
    if (w.partition != "train") throw DataError("expected a train partition, got '" + w.partition + "'");
    const std::string sid = w.extra.at("session_id").get<std::string>();
    const auto counts_vec = w.extra.at("train_counts_before_oversampling").get<std::vector<std::size_t>>();
    if (counts_vec.size() != kNumClasses) throw DataError("class count list must have 5 entries");
    ClassCounts counts{};
    std::copy(counts_vec.begin(), counts_vec.end(), counts.begin());
    const std::vector<double> weights = resolve_class_weights(cfg.train, counts);

    const std::string name(model_name(model));
    TrainConfig tc = cfg.train;
    tc.rng_seed = derive_seed(cfg.seed, "train/" + sid + "/" + name + "/" + std::to_string(w.delta_ms));
    auto clf = make_classifier<float>(model, w.n_channels, w.window_len, cfg.shallow, tc.rng_seed);
    const BatchView<float> data{w.data, w.n_windows, w.n_channels, w.window_len};
    const TrainResult result = train(*clf, data, w.labels, weights, tc);

    const std::string stem = name + "_" + horizon_tag(w.delta_ms);
    json header = {{"session_id", sid},        {"delta_ms", w.delta_ms},       {"seed", tc.rng_seed},
                   {"epochs", tc.epochs},      {"batch_size", tc.batch_size},  {"learning_rate", tc.learning_rate},
                   {"class_weights", weights}, {"n_train_windows", w.n_windows}, {"optimizer_steps", result.steps}};
    const fs::path ckpt = out / (stem + ".ckpt");
    save_checkpoint(*clf, header, ckpt.string());
    std::string loss = "epoch,mean_loss\n";
    for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
      loss += std::to_string(e + 1) + ',';
      detail::append_double(loss, result.loss_trace[e]);
      loss += '\n';
    }
    detail::write_file_atomic(out / (stem + "_loss.csv"), loss);
    return ckpt;
  });
}

RunRecord cmd_eval(const fs::path& checkpoint, const fs::path& test_stem, const fs::path& out) {
  return in_stage("eval", checkpoint, [&] {
    LoadedCheckpoint ck = load_checkpoint(checkpoint.string());
    const WindowTensor w = read_window_tensor(test_stem);
    if (w.partition != "test") throw DataError("expected a test partition, got '" + w.partition + "'");
    const std::string sid = w.extra.at("session_id").get<std::string>();
    if (ck.header.at("session_id").get<std::string>() != sid || ck.header.at("delta_ms").get<int>() != w.delta_ms) {
      throw DataError("checkpoint was trained on a different session or horizon than " + test_stem.string());
    }
    if (ck.model->input_channels() != w.n_channels || ck.model->input_samples() != w.window_len) {
      throw DataError("checkpoint input shape does not match the test windows");
    }
    const BatchView<float> data{w.data, w.n_windows, w.n_channels, w.window_len};
    const std::vector<CommandLabel> pred = predict(*ck.model, data);
    std::vector<CommandLabel> truth;
    truth.reserve(w.labels.size());
    for (int code : w.labels) truth.push_back(label_from_code(code));

    RunRecord r;
    r.model = std::string(model_name(ck.model->kind()));
    r.horizon_ms = w.delta_ms;
    r.run_id = sid;
    r.confusion = confusion(truth, pred);
    r.metrics = metrics_from_confusion(r.confusion);
    write_json(out / (r.model + "_" + horizon_tag(w.delta_ms) + ".json"), to_json(r));
    return r;
  });
}

BenchmarkReport cmd_report(const std::vector<fs::path>& eval_inputs, const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& in : eval_inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".json" && e.path().parent_path().filename() == "eval") {
          files.push_back(e.path());
        }
      }
    } else {
      files.push_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  BenchmarkReport report;
  for (const auto& f : files) {
    report.runs.push_back(in_stage("report", f, [&] { return run_record_from_json(read_json(f)); }));
  }
  std::set<std::tuple<std::string, int, std::string>> keys;
  for (const auto& r : report.runs) {
    if (!keys.emplace(r.model, r.horizon_ms, r.run_id).second) {
      throw DataError("[report] duplicate result for " + r.model + " at " + std::to_string(r.horizon_ms) +
                      " ms in run " + r.run_id);
    }
  }
  in_stage("report", out, [&] { emit_report(report, out); });
  return report;
}

BenchmarkReport cmd_run_all(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const std::vector<ModelKind> models = cfg.model_kinds();
  in_stage("run-all", out / "config.json", [&] { write_json(out / "config.json", to_json(cfg)); });

  std::vector<fs::path> sessions;
  if (cfg.simulate) {
    sessions = cmd_simulate(cfg, out);
  } else {
    sessions.assign(cfg.sessions.begin(), cfg.sessions.end());
  }
  std::vector<std::string> sids;
  std::set<std::string> unique;
  for (const auto& dir : sessions) {
    sids.push_back(session_id_of(dir));
    if (!unique.insert(sids.back()).second) throw DataError("[run-all] duplicate session id " + sids.back());
  }

  const auto mark_failures = [&](const char* phase, const std::vector<std::exception_ptr>& errors,
                                 const std::function<std::size_t(std::size_t)>& session_of) {
    std::exception_ptr first;
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i]) continue;
      if (!first) first = errors[i];
      detail::write_file_atomic(out / sids[session_of(i)] / "INCOMPLETE",
                                std::string("phase: ") + phase + "\n" + describe(errors[i]) + "\n");
    }
    if (first) std::rethrow_exception(first);
  };

  for (const auto& sid : sids) fs::remove(out / sid / "INCOMPLETE");

  // phase 1: per session
  mark_failures("preprocess+label", parallel_for(sessions.size(), cfg.jobs,
                             [&](std::size_t i) {
                               const fs::path base = out / sids[i];
                               cmd_preprocess(sessions[i], cfg, base / "preprocessed");
                               cmd_label(base / "preprocessed", cfg, base / "labels");
                             }),
                [](std::size_t i) { return i; });

  // phase 2: per (session, horizon)
  const std::size_t n_h = cfg.horizons_ms.size();
  mark_failures("split+train+eval", parallel_for(sessions.size() * n_h, cfg.jobs,
                             [&](std::size_t task) {
                               const std::size_t i = task / n_h;
                               const int h = cfg.horizons_ms[task % n_h];
                               const fs::path base = out / sids[i];
                               const auto [train_stem, test_stem] =
                                   cmd_split(base / "preprocessed", base / "labels" / ("labels_" + std::to_string(h) + ".csv"),
                                             h, cfg, base / "windows");
                               for (ModelKind m : models) {
                                 const fs::path ckpt = cmd_train(train_stem, m, cfg, base / "models");
                                 cmd_eval(ckpt, test_stem, base / "eval");
                               }
                             }),
                [n_h](std::size_t task) { return task / n_h; });

  std::vector<fs::path> eval_files;
  for (const auto& sid : sids) {
    for (int h : cfg.horizons_ms) {
      for (ModelKind m : models) {
        eval_files.push_back(out / sid / "eval" / (std::string(model_name(m)) + "_" + horizon_tag(h) + ".json"));
      }
    }
  }
  return cmd_report(eval_files, out / "report");
}

}  // namespace intentbench
