#include "intentbench/config.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "intentbench/errors.hpp"
#include "intentbench/rng.hpp"
#include "io_util.hpp"

namespace intentbench {

using nlohmann::json;

void RunConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (simulate) {
    if (n_sessions < 1) throw ConfigError("n_sessions must be >= 1");
  } else if (sessions.empty()) {
    throw ConfigError("sessions must list at least one directory when simulate is false");
  }
  if (horizons_ms.empty()) throw ConfigError("horizons_ms must not be empty");
  std::set<int> seen;
  for (int h : horizons_ms) {
    if (!Horizon::is_valid(h)) {
      throw ConfigError("horizon " + std::to_string(h) + " ms is not one of 0, 300, 400, ..., 1000");
    }
    if (!seen.insert(h).second) throw ConfigError("horizon " + std::to_string(h) + " ms listed twice");
  }
  if (models.empty()) throw ConfigError("models must not be empty");
  std::set<std::string> model_names;
  for (const auto& m : models) {
    parse_model_kind(m);
    if (!model_names.insert(m).second) throw ConfigError("model '" + m + "' listed twice");
  }
  alignment.validate();
  label_rule.validate();
  bad_channels.validate();
  if (preprocess.max_reference_iterations < 1) throw ConfigError("preprocess.max_reference_iterations must be >= 1");
  split.validate();
  train.validate();
  shallow.validate(split.window_len);
  if (shallow.n_classes != kNumClasses) throw ConfigError("shallow.n_classes must be 5");
  if (simulate) {
    synth.validate(split.n_chunks);
    filter.validate(synth.sample_rate_hz);
  }
}

std::vector<ModelKind> RunConfig::model_kinds() const {
  std::vector<ModelKind> out;
  for (const auto& m : models) out.push_back(parse_model_kind(m));
  return out;
}

std::uint64_t derive_seed(std::uint64_t global, std::string_view context) {
  // FNV-1a over the context, then mixed with the global seed
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : context) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(global) ^ h);
}

namespace {

json optional_json(const auto& opt) { return opt ? json(*opt) : json(nullptr); }

json to_json_snr(double snr) {
  // JSON has no infinity; spell it as a string
  if (std::isinf(snr)) return "inf";
  return snr;
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["simulate"] = c.simulate;
  j["n_sessions"] = c.n_sessions;
  j["sessions"] = c.sessions;
  j["horizons_ms"] = c.horizons_ms;
  j["models"] = c.models;
  j["alignment"] = {{"max_gap_ms", c.alignment.max_gap_ms}, {"tie_break", "earlier"}};
  j["label_rule"] = {{"tau", c.label_rule.tau}};
  j["filter"] = {{"highpass_hz", c.filter.highpass_hz},   {"highpass_order", c.filter.highpass_order},
                 {"notch_hz", c.filter.notch_hz},         {"notch_q", c.filter.notch_q},
                 {"zero_phase", c.filter.zero_phase},     {"notch_harmonic", c.filter.notch_harmonic}};
  const auto& b = c.bad_channels;
  j["bad_channels"] = {{"deviation_z", b.deviation_z},
                       {"correlation_min", b.correlation_min},
                       {"correlation_window_s", b.correlation_window_s},
                       {"correlation_bad_fraction", b.correlation_bad_fraction},
                       {"ransac_frac", b.ransac_frac},
                       {"ransac_corr_min", b.ransac_corr_min},
                       {"ransac_samples", b.ransac_samples},
                       {"ransac_window_s", b.ransac_window_s},
                       {"ransac_bad_fraction", b.ransac_bad_fraction},
                       {"ransac_seed", b.ransac_seed}};
  j["preprocess"] = {{"max_reference_iterations", c.preprocess.max_reference_iterations},
                     {"zscore_per_session", c.preprocess.zscore_per_session}};
  const auto& s = c.split;
  j["split"] = {{"n_chunks", s.n_chunks},       {"train_fraction", s.train_fraction},
                {"window_len", s.window_len},   {"overlap_fraction", s.overlap_fraction},
                {"oversample", s.oversample},   {"gap_break_ns", optional_json(s.gap_break_ns)},
                {"edge_trim_s", s.edge_trim_s}};
  const auto& t = c.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"learning_rate", t.learning_rate},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},
                {"class_weights", optional_json(t.class_weights)},
                {"weighted_loss", t.weighted_loss}};
  const auto& sh = c.shallow;
  j["shallow"] = {{"n_temporal_filters", sh.n_temporal_filters},
                  {"temporal_kernel", sh.temporal_kernel},
                  {"n_spatial_filters", sh.n_spatial_filters},
                  {"pool_len", sh.pool_len},
                  {"pool_stride", sh.pool_stride},
                  {"dropout_p", sh.dropout_p},
                  {"n_classes", sh.n_classes}};
  const auto& y = c.synth;
  json freqs = json::object();
  for (auto l : kAllLabels) freqs[std::string(label_name(l))] = y.class_freqs_hz[static_cast<std::size_t>(label_code(l))];
  j["synth"] = {{"duration_s", y.duration_s},
                {"sample_rate_hz", y.sample_rate_hz},
                {"n_channels", y.n_channels},
                {"class_freqs_hz", freqs},
                {"snr_db", to_json_snr(y.snr_db)},
                {"segment_len_s", y.segment_len_s},
                {"noise_model", noise_model_name(y.noise_model)},
                {"label_lag_ms", y.label_lag_ms},
                {"signal_amplitude_uv", y.signal_amplitude_uv},
                {"background_fraction", y.background_fraction},
                {"n_background_sources", y.n_background_sources},
                {"signal_width_rad", y.signal_width_rad},
                {"background_width_rad", y.background_width_rad},
                {"line_noise_factor", optional_json(y.line_noise_factor)},
                {"corrupt_channel", optional_json(y.corrupt_channel)},
                {"corrupt_mode", corrupt_mode_name(y.corrupt_mode)},
                {"constant_command", y.constant_command ? json(label_name(*y.constant_command)) : json(nullptr)}};
  return j;
}

namespace {

CommandLabel parse_label_name(const std::string& name, const std::string& where) {
  for (auto l : kAllLabels) {
    if (label_name(l) == name) return l;
  }
  throw ConfigError(where + ": unknown command '" + name + "'");
}

/// Reads known keys of one JSON object and rejects the rest.
class ObjectReader {
public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& dst) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& dst) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      dst.reset();
      return;
    }
    T value{};
    get(key, value);
    dst = std::move(value);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  [[nodiscard]] std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : path_;
    if (key) p += std::string(path_.empty() ? ": " : ".") + key;
    return p;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + (path_.empty() ? key : path_ + "." + key));
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void section(ObjectReader& parent, const char* key, Fn&& fn) {
  if (const json* j = parent.child(key)) {
    ObjectReader r(*j, key);
    fn(r);
    r.finish();
  }
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  ObjectReader root(j, "");
  root.get("seed", c.seed);
  root.get("out_dir", c.out_dir);
  root.get("jobs", c.jobs);
  root.get("simulate", c.simulate);
  root.get("n_sessions", c.n_sessions);
  root.get("sessions", c.sessions);
  root.get("horizons_ms", c.horizons_ms);
  root.get("models", c.models);
  section(root, "alignment", [&](ObjectReader& r) {
    r.get("max_gap_ms", c.alignment.max_gap_ms);
    std::string tie = "earlier";
    r.get("tie_break", tie);
    if (tie != "earlier") throw ConfigError("alignment.tie_break must be \"earlier\"");
  });
  section(root, "label_rule", [&](ObjectReader& r) { r.get("tau", c.label_rule.tau); });
  section(root, "filter", [&](ObjectReader& r) {
    r.get("highpass_hz", c.filter.highpass_hz);
    r.get("highpass_order", c.filter.highpass_order);
    r.get("notch_hz", c.filter.notch_hz);
    r.get("notch_q", c.filter.notch_q);
    r.get("zero_phase", c.filter.zero_phase);
    r.get("notch_harmonic", c.filter.notch_harmonic);
  });
  section(root, "bad_channels", [&](ObjectReader& r) {
    auto& b = c.bad_channels;
    r.get("deviation_z", b.deviation_z);
    r.get("correlation_min", b.correlation_min);
    r.get("correlation_window_s", b.correlation_window_s);
    r.get("correlation_bad_fraction", b.correlation_bad_fraction);
    r.get("ransac_frac", b.ransac_frac);
    r.get("ransac_corr_min", b.ransac_corr_min);
    r.get("ransac_samples", b.ransac_samples);
    r.get("ransac_window_s", b.ransac_window_s);
    r.get("ransac_bad_fraction", b.ransac_bad_fraction);
    r.get("ransac_seed", b.ransac_seed);
  });
  section(root, "preprocess", [&](ObjectReader& r) {
    r.get("max_reference_iterations", c.preprocess.max_reference_iterations);
    r.get("zscore_per_session", c.preprocess.zscore_per_session);
  });
  section(root, "split", [&](ObjectReader& r) {
    auto& s = c.split;
    r.get("n_chunks", s.n_chunks);
    r.get("train_fraction", s.train_fraction);
    r.get("window_len", s.window_len);
    r.get("overlap_fraction", s.overlap_fraction);
    r.get("oversample", s.oversample);
    r.get_optional("gap_break_ns", s.gap_break_ns);
    r.get("edge_trim_s", s.edge_trim_s);
  });
  section(root, "train", [&](ObjectReader& r) {
    auto& t = c.train;
    r.get("batch_size", t.batch_size);
    r.get("epochs", t.epochs);
    r.get("learning_rate", t.learning_rate);
    r.get("adam_beta1", t.adam_beta1);
    r.get("adam_beta2", t.adam_beta2);
    r.get("adam_eps", t.adam_eps);
    r.get_optional("class_weights", t.class_weights);
    r.get("weighted_loss", t.weighted_loss);
  });
  section(root, "shallow", [&](ObjectReader& r) {
    auto& s = c.shallow;
    r.get("n_temporal_filters", s.n_temporal_filters);
    r.get("temporal_kernel", s.temporal_kernel);
    r.get("n_spatial_filters", s.n_spatial_filters);
    r.get("pool_len", s.pool_len);
    r.get("pool_stride", s.pool_stride);
    r.get("dropout_p", s.dropout_p);
    r.get("n_classes", s.n_classes);
  });
  section(root, "synth", [&](ObjectReader& r) {
    auto& y = c.synth;
    r.get("duration_s", y.duration_s);
    r.get("sample_rate_hz", y.sample_rate_hz);
    r.get("n_channels", y.n_channels);
    if (const json* f = r.child("class_freqs_hz")) {
      ObjectReader fr(*f, "synth.class_freqs_hz");
      for (auto l : kAllLabels) {
        const std::string name(label_name(l));
        fr.get(name.c_str(), y.class_freqs_hz[static_cast<std::size_t>(label_code(l))]);
      }
      fr.finish();
    }
    if (const json* snr = r.child("snr_db")) {
      if (snr->is_string() && snr->get<std::string>() == "inf") {
        y.snr_db = std::numeric_limits<double>::infinity();
      } else if (snr->is_number()) {
        y.snr_db = snr->get<double>();
      } else {
        throw ConfigError("synth.snr_db must be a number or \"inf\"");
      }
    }
    r.get("segment_len_s", y.segment_len_s);
    std::string noise(noise_model_name(y.noise_model));
    r.get("noise_model", noise);
    y.noise_model = parse_noise_model(noise);
    r.get("label_lag_ms", y.label_lag_ms);
    r.get("signal_amplitude_uv", y.signal_amplitude_uv);
    r.get("background_fraction", y.background_fraction);
    r.get("n_background_sources", y.n_background_sources);
    r.get("signal_width_rad", y.signal_width_rad);
    r.get("background_width_rad", y.background_width_rad);
    r.get_optional("line_noise_factor", y.line_noise_factor);
    r.get_optional("corrupt_channel", y.corrupt_channel);
    std::string mode(corrupt_mode_name(y.corrupt_mode));
    r.get("corrupt_mode", mode);
    y.corrupt_mode = parse_corrupt_mode(mode);
    std::optional<std::string> constant;
    r.get_optional("constant_command", constant);
    if (constant) y.constant_command = parse_label_name(*constant, "synth.constant_command");
  });
  root.finish();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  json j;
  try {
    j = json::parse(detail::read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  RunConfig c = run_config_from_json(j);
  c.validate();
  return c;
}

}  // namespace intentbench
