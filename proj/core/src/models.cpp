#include "intentbench/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "intentbench/errors.hpp"
#include "intentbench/rng.hpp"
#include "io_util.hpp"

namespace intentbench {

std::string_view model_name(ModelKind k) noexcept {
  return k == ModelKind::Linear ? "linear" : "shallow";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "shallow" || name == "shallowconvnet") return ModelKind::Shallow;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected linear or shallow)");
}

void ShallowConvNetSpec::validate(int window_len) const {
  if (n_temporal_filters < 1 || n_spatial_filters < 1 || n_classes < 2) {
    throw ConfigError("shallow: filter and class counts must be positive");
  }
  if (temporal_kernel < 1 || temporal_kernel > window_len) {
    throw ConfigError("shallow: temporal_kernel must lie in [1, window_len]");
  }
  if (pool_len < 1 || pool_len > window_len - temporal_kernel + 1) {
    throw ConfigError("shallow: pool_len must lie in [1, window_len - temporal_kernel + 1]");
  }
  if (pool_stride < 1) throw ConfigError("shallow: pool_stride must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("shallow: dropout_p must lie in [0, 1)");
}

int ShallowConvNetSpec::n_frames(int window_len) const {
  return (window_len - temporal_kernel + 1 - pool_len) / pool_stride + 1;
}

template <typename T>
std::size_t ModelParams<T>::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.value.size());
  return n;
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.value.allFinite()) return false;
  }
  return true;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like() const {
  ModelParams<T> out = *this;
  for (auto& t : out.tensors) t.value.setZero();
  return out;
}

namespace {

template <typename T>
NamedTensor<T> glorot_tensor(std::string name, std::vector<std::size_t> shape, double fan_in,
                             double fan_out, Rng& rng) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  NamedTensor<T> t{std::move(name), std::move(shape), VectorX<T>(static_cast<Eigen::Index>(n))};
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value(i) = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

template <typename T>
NamedTensor<T> zero_tensor(std::string name, std::size_t n) {
  return {std::move(name), {n}, VectorX<T>::Zero(static_cast<Eigen::Index>(n))};
}

template <typename T>
Eigen::Map<MatrixR<T>> as_matrix(NamedTensor<T>& t, std::size_t rows, std::size_t cols) {
  return {t.value.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

template <typename T>
Eigen::Map<const MatrixR<T>> as_matrix(const NamedTensor<T>& t, std::size_t rows, std::size_t cols) {
  return {t.value.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

template <typename T>
MatrixR<T> log_softmax_rows(const MatrixR<T>& logits) {
  MatrixR<T> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T m = logits.row(i).maxCoeff();
    T s = T(0);
    for (Eigen::Index k = 0; k < logits.cols(); ++k) s += std::exp(logits(i, k) - m);
    const T lse = m + std::log(s);
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

void check_batch(std::size_t channels, std::size_t samples, std::size_t n, std::size_t got_c,
                 std::size_t got_s, std::size_t data_size) {
  if (got_c != channels || got_s != samples) {
    throw DataError("batch shape " + std::to_string(got_c) + "x" + std::to_string(got_s) +
                    " does not match model input " + std::to_string(channels) + "x" +
                    std::to_string(samples));
  }
  if (data_size != n * channels * samples) throw DataError("batch buffer size does not match its shape");
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear softmax

template <typename T>
LinearSoftmax<T>::LinearSoftmax(std::size_t channels, std::size_t samples, std::size_t n_classes,
                                std::uint64_t seed)
    : channels_(channels), samples_(samples), dim_(channels * samples), n_classes_(n_classes) {
  Rng rng(seed);
  this->params_.tensors.push_back(glorot_tensor<T>("dense.weight", {n_classes, dim_},
                                                   static_cast<double>(dim_),
                                                   static_cast<double>(n_classes), rng));
  this->params_.tensors.push_back(zero_tensor<T>("dense.bias", n_classes));
}

template <typename T>
MatrixR<T> LinearSoftmax<T>::forward(const BatchView<T>& x, bool, std::uint64_t) {
  if (x.channels * x.samples != dim_ || x.data.size() != x.n * dim_) {
    throw DataError("linear: batch shape does not match model input dimension " + std::to_string(dim_));
  }
  input_ = Eigen::Map<const MatrixR<T>>(x.data.data(), static_cast<Eigen::Index>(x.n),
                                        static_cast<Eigen::Index>(dim_));
  const auto w = as_matrix(this->params_.tensors[0], n_classes_, dim_);
  const auto& b = this->params_.tensors[1].value;
  MatrixR<T> logits = input_ * w.transpose();
  logits.rowwise() += b.transpose();
  return log_softmax_rows(logits);
}

template <typename T>
void LinearSoftmax<T>::backward(const MatrixR<T>& dlogits, ModelParams<T>& grads) {
  auto gw = as_matrix(grads.tensors[0], n_classes_, dim_);
  gw.noalias() += dlogits.transpose() * input_;
  grads.tensors[1].value += dlogits.colwise().sum().transpose();
}

// ---------------------------------------------------------------------------
// ShallowConvNet
//
// Parameters: temporal.weight [F, K], temporal.bias [F], spatial.weight
// [G, F, C], spatial.bias [G], dense.weight [n_classes, G*P], dense.bias.
// The temporal and spatial convolutions are both linear, so the forward pass
// folds them into one G x (C*K) filter bank applied as a single GEMM over
// im2col columns; backward chains the folded gradient onto both tensors.

template <typename T>
ShallowConvNet<T>::ShallowConvNet(std::size_t channels, std::size_t samples,
                                  const ShallowConvNetSpec& spec, std::uint64_t seed)
    : spec_(spec), channels_(channels), samples_(samples) {
  spec_.validate(static_cast<int>(samples));
  conv_len_ = samples - static_cast<std::size_t>(spec.temporal_kernel) + 1;
  frames_ = static_cast<std::size_t>(spec.n_frames(static_cast<int>(samples)));

  const auto f = static_cast<std::size_t>(spec.n_temporal_filters);
  const auto k = static_cast<std::size_t>(spec.temporal_kernel);
  const auto g = static_cast<std::size_t>(spec.n_spatial_filters);
  const auto nc = static_cast<std::size_t>(spec.n_classes);
  const double kd = static_cast<double>(k);
  const double cd = static_cast<double>(channels);

  Rng rng(seed);
  auto& t = this->params_.tensors;
  t.push_back(glorot_tensor<T>("temporal.weight", {f, k}, kd, static_cast<double>(f) * kd, rng));
  t.push_back(zero_tensor<T>("temporal.bias", f));
  t.push_back(glorot_tensor<T>("spatial.weight", {g, f, channels}, static_cast<double>(f) * cd,
                               static_cast<double>(g) * cd, rng));
  t.push_back(zero_tensor<T>("spatial.bias", g));
  t.push_back(glorot_tensor<T>("dense.weight", {nc, g * frames_}, static_cast<double>(g * frames_),
                               static_cast<double>(nc), rng));
  t.push_back(zero_tensor<T>("dense.bias", nc));
}

template <typename T>
MatrixR<T> ShallowConvNet<T>::forward(const BatchView<T>& x, bool train_mode,
                                      std::uint64_t dropout_key) {
  check_batch(channels_, samples_, x.n, x.channels, x.samples, x.data.size());
  const auto f_n = static_cast<std::size_t>(spec_.n_temporal_filters);
  const auto k_n = static_cast<std::size_t>(spec_.temporal_kernel);
  const auto g_n = static_cast<std::size_t>(spec_.n_spatial_filters);
  const auto pool = static_cast<std::size_t>(spec_.pool_len);
  const auto stride = static_cast<std::size_t>(spec_.pool_stride);
  const std::size_t c_n = channels_;
  const std::size_t l_n = conv_len_;
  const std::size_t p_n = frames_;
  const std::size_t b_n = x.n;
  batch_ = b_n;
  const auto& tensors = this->params_.tensors;
  const T* wt = tensors[0].value.data();
  const T* bt = tensors[1].value.data();
  const T* ws = tensors[2].value.data();
  const T* bs = tensors[3].value.data();

  combined_.resize(static_cast<Eigen::Index>(g_n), static_cast<Eigen::Index>(c_n * k_n));
  VectorX<T> bias(static_cast<Eigen::Index>(g_n));
  for (std::size_t g = 0; g < g_n; ++g) {
    T b = bs[g];
    for (std::size_t c = 0; c < c_n; ++c) {
      for (std::size_t k = 0; k < k_n; ++k) {
        T acc = T(0);
        for (std::size_t f = 0; f < f_n; ++f) acc += ws[(g * f_n + f) * c_n + c] * wt[f * k_n + k];
        combined_(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(c * k_n + k)) = acc;
      }
    }
    for (std::size_t f = 0; f < f_n; ++f) {
      T spatial_sum = T(0);
      for (std::size_t c = 0; c < c_n; ++c) spatial_sum += ws[(g * f_n + f) * c_n + c];
      b += bt[f] * spatial_sum;
    }
    bias(static_cast<Eigen::Index>(g)) = b;
  }

  columns_.resize(static_cast<Eigen::Index>(c_n * k_n), static_cast<Eigen::Index>(b_n * l_n));
  for (std::size_t c = 0; c < c_n; ++c) {
    for (std::size_t k = 0; k < k_n; ++k) {
      T* row = columns_.row(static_cast<Eigen::Index>(c * k_n + k)).data();
      for (std::size_t b = 0; b < b_n; ++b) {
        const T* src = x.data.data() + (b * c_n + c) * samples_ + k;
        std::copy(src, src + l_n, row + b * l_n);
      }
    }
  }

  conv_out_.noalias() = combined_ * columns_;
  conv_out_.colwise() += bias;

  const std::size_t units = g_n * p_n;
  pooled_.resize(static_cast<Eigen::Index>(b_n), static_cast<Eigen::Index>(units));
  const T inv_pool = T(1) / static_cast<T>(pool);
  for (std::size_t g = 0; g < g_n; ++g) {
    const T* h = conv_out_.row(static_cast<Eigen::Index>(g)).data();
    for (std::size_t b = 0; b < b_n; ++b) {
      for (std::size_t p = 0; p < p_n; ++p) {
        const T* seg = h + b * l_n + p * stride;
        T acc = T(0);
        for (std::size_t j = 0; j < pool; ++j) acc += seg[j] * seg[j];
        pooled_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(g * p_n + p)) = acc * inv_pool;
      }
    }
  }

  const T floor_v = static_cast<T>(1e-6);
  mask_.setOnes(static_cast<Eigen::Index>(b_n), static_cast<Eigen::Index>(units));
  if (train_mode && spec_.dropout_p > 0.0) {
    const T keep_scale = static_cast<T>(1.0 / (1.0 - spec_.dropout_p));
    for (std::size_t b = 0; b < b_n; ++b) {
      for (std::size_t u = 0; u < units; ++u) {
        const bool drop = counter_uniform(dropout_key, b * units + u) < spec_.dropout_p;
        mask_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(u)) = drop ? T(0) : keep_scale;
      }
    }
  }
  features_ = pooled_.unaryExpr([floor_v](T v) { return std::log(std::max(v, floor_v)); })
                  .cwiseProduct(mask_);

  const auto wd = as_matrix(tensors[4], static_cast<std::size_t>(spec_.n_classes), units);
  MatrixR<T> logits = features_ * wd.transpose();
  logits.rowwise() += tensors[5].value.transpose();
  return log_softmax_rows(logits);
}

template <typename T>
void ShallowConvNet<T>::backward(const MatrixR<T>& dlogits, ModelParams<T>& grads) {
  const auto f_n = static_cast<std::size_t>(spec_.n_temporal_filters);
  const auto k_n = static_cast<std::size_t>(spec_.temporal_kernel);
  const auto g_n = static_cast<std::size_t>(spec_.n_spatial_filters);
  const auto pool = static_cast<std::size_t>(spec_.pool_len);
  const auto stride = static_cast<std::size_t>(spec_.pool_stride);
  const std::size_t c_n = channels_;
  const std::size_t l_n = conv_len_;
  const std::size_t p_n = frames_;
  const std::size_t b_n = batch_;
  const std::size_t units = g_n * p_n;
  const auto nc = static_cast<std::size_t>(spec_.n_classes);
  const auto& tensors = this->params_.tensors;

  auto gwd = as_matrix(grads.tensors[4], nc, units);
  gwd.noalias() += dlogits.transpose() * features_;
  grads.tensors[5].value += dlogits.colwise().sum().transpose();

  const auto wd = as_matrix(tensors[4], nc, units);
  MatrixR<T> dpool = (dlogits * wd).cwiseProduct(mask_);
  const T floor_v = static_cast<T>(1e-6);
  for (Eigen::Index i = 0; i < dpool.size(); ++i) {
    const T v = pooled_.data()[i];
    dpool.data()[i] = v > floor_v ? dpool.data()[i] / v : T(0);
  }

  MatrixR<T> dconv = MatrixR<T>::Zero(static_cast<Eigen::Index>(g_n), static_cast<Eigen::Index>(b_n * l_n));
  const T inv_pool = T(1) / static_cast<T>(pool);
  for (std::size_t g = 0; g < g_n; ++g) {
    T* d = dconv.row(static_cast<Eigen::Index>(g)).data();
    const T* h = conv_out_.row(static_cast<Eigen::Index>(g)).data();
    for (std::size_t b = 0; b < b_n; ++b) {
      for (std::size_t p = 0; p < p_n; ++p) {
        const T v = dpool(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(g * p_n + p)) * inv_pool;
        T* seg = d + b * l_n + p * stride;
        for (std::size_t j = 0; j < pool; ++j) seg[j] += v;
      }
    }
    for (std::size_t i = 0; i < b_n * l_n; ++i) d[i] *= T(2) * h[i];
  }

  const MatrixR<T> dcombined = dconv * columns_.transpose();
  const VectorX<T> dbias = dconv.rowwise().sum();

  const T* wt = tensors[0].value.data();
  const T* bt = tensors[1].value.data();
  const T* ws = tensors[2].value.data();
  T* gwt = grads.tensors[0].value.data();
  T* gbt = grads.tensors[1].value.data();
  T* gws = grads.tensors[2].value.data();
  T* gbs = grads.tensors[3].value.data();
  for (std::size_t g = 0; g < g_n; ++g) {
    const T db = dbias(static_cast<Eigen::Index>(g));
    gbs[g] += db;
    for (std::size_t f = 0; f < f_n; ++f) {
      T spatial_sum = T(0);
      for (std::size_t c = 0; c < c_n; ++c) {
        const T w_s = ws[(g * f_n + f) * c_n + c];
        spatial_sum += w_s;
        T acc = db * bt[f];
        for (std::size_t k = 0; k < k_n; ++k) {
          const T dwc = dcombined(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(c * k_n + k));
          acc += dwc * wt[f * k_n + k];
          gwt[f * k_n + k] += dwc * w_s;
        }
        gws[(g * f_n + f) * c_n + c] += acc;
      }
      gbt[f] += db * spatial_sum;
    }
  }
}

// ---------------------------------------------------------------------------

template <typename T>
std::unique_ptr<Classifier<T>> make_classifier(ModelKind kind, std::size_t channels,
                                               std::size_t samples, const ShallowConvNetSpec& spec,
                                               std::uint64_t seed) {
  if (kind == ModelKind::Linear) {
    return std::make_unique<LinearSoftmax<T>>(channels, samples,
                                              static_cast<std::size_t>(spec.n_classes), seed);
  }
  return std::make_unique<ShallowConvNet<T>>(channels, samples, spec, seed);
}

template <typename T>
MatrixR<T> probabilities(const MatrixR<T>& log_probs) {
  return log_probs.array().exp().matrix();
}

template <typename T>
T loss_weighted_ce(const MatrixR<T>& log_probs, std::span<const int> labels,
                   std::span<const double> class_weights) {
  if (labels.size() != static_cast<std::size_t>(log_probs.rows())) {
    throw DataError("loss: label count does not match batch size");
  }
  T total = T(0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    total += static_cast<T>(class_weights[y]) * -log_probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(y));
  }
  return total / static_cast<T>(labels.size());
}

template <typename T>
MatrixR<T> loss_gradient(const MatrixR<T>& log_probs, std::span<const int> labels,
                         std::span<const double> class_weights) {
  MatrixR<T> d = probabilities(log_probs);
  const T inv_n = T(1) / static_cast<T>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<Eigen::Index>(labels[i]);
    const auto row = static_cast<Eigen::Index>(i);
    d(row, y) -= T(1);
    d.row(row) *= static_cast<T>(class_weights[static_cast<std::size_t>(y)]) * inv_n;
  }
  return d;
}

template <typename T>
LossAndGradient<T> loss_and_gradient(Classifier<T>& model, const BatchView<T>& x,
                                     std::span<const int> labels,
                                     std::span<const double> class_weights, bool train_mode,
                                     std::uint64_t dropout_key) {
  const MatrixR<T> log_probs = model.forward(x, train_mode, dropout_key);
  LossAndGradient<T> out{loss_weighted_ce(log_probs, labels, class_weights),
                         model.params().zeros_like()};
  model.backward(loss_gradient(log_probs, labels, class_weights), out.grads);
  return out;
}

template <typename T>
std::vector<CommandLabel> predict(Classifier<T>& model, const BatchView<T>& x, std::size_t chunk) {
  std::vector<CommandLabel> out;
  out.reserve(x.n);
  const std::size_t per = x.channels * x.samples;
  for (std::size_t start = 0; start < x.n; start += chunk) {
    const std::size_t n = std::min(chunk, x.n - start);
    BatchView<T> part{x.data.subspan(start * per, n * per), n, x.channels, x.samples};
    const MatrixR<T> lp = model.forward(part, false, 0);
    for (Eigen::Index i = 0; i < lp.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < lp.cols(); ++k) {
        if (lp(i, k) > lp(i, best)) best = k;
      }
      out.push_back(static_cast<CommandLabel>(best));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// checkpoints

void save_checkpoint(const Classifier<float>& model, const nlohmann::json& header_extra,
                     const std::string& path) {
  nlohmann::json header = header_extra;
  header["format_version"] = 1;
  header["model"] = model_name(model.kind());
  header["dtype"] = "f32le";
  header["n_classes"] = model.n_classes();
  header["channels"] = model.input_channels();
  header["window_len"] = model.input_samples();
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : model.params().tensors) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  header["tensors"] = tensors;
  if (const auto* s = dynamic_cast<const ShallowConvNet<float>*>(&model)) {
    const auto& sp = s->spec();
    header["spec"] = {{"n_temporal_filters", sp.n_temporal_filters},
                      {"temporal_kernel", sp.temporal_kernel},
                      {"n_spatial_filters", sp.n_spatial_filters},
                      {"pool_len", sp.pool_len},
                      {"pool_stride", sp.pool_stride},
                      {"dropout_p", sp.dropout_p},
                      {"n_classes", sp.n_classes}};
  }
  const std::string text = header.dump();
  std::string bytes(8, '\0');
  const std::uint64_t len = text.size();
  std::memcpy(bytes.data(), &len, sizeof(len));
  bytes += text;
  for (const auto& t : model.params().tensors) {
    detail::append_f32le(bytes, std::span<const float>(t.value.data(), static_cast<std::size_t>(t.value.size())));
  }
  detail::write_file_atomic(path, bytes);
}

namespace {
void fill_tensors(LoadedCheckpoint& out, const std::vector<char>& bytes, std::size_t start,
                  const std::string& path) {
  const auto blob = detail::decode_f32le(std::span<const char>(bytes).subspan(start));
  auto& tensors = out.model->params().tensors;
  const auto& listed = out.header.at("tensors");
  if (listed.size() != tensors.size()) throw DataError(path + ": tensor list does not match model");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (listed[i].at("shape").get<std::vector<std::size_t>>() != tensors[i].shape) {
      throw DataError(path + ": shape mismatch for " + tensors[i].name);
    }
    const auto n = static_cast<std::size_t>(tensors[i].value.size());
    if (offset + n > blob.size()) throw DataError(path + ": tensor blob too short");
    std::copy(blob.begin() + static_cast<std::ptrdiff_t>(offset),
              blob.begin() + static_cast<std::ptrdiff_t>(offset + n), tensors[i].value.data());
    offset += n;
  }
  if (offset != blob.size()) throw DataError(path + ": trailing bytes after tensors");
}
}  // namespace

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const auto bytes = detail::read_binary_file(path);
  if (bytes.size() < 8) throw DataError(path + ": truncated checkpoint");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data(), sizeof(len));
  if (len > bytes.size() - 8) throw DataError(path + ": bad header length");
  LoadedCheckpoint out;
  try {
    out.header = nlohmann::json::parse(std::string(bytes.data() + 8, len));
    const ModelKind kind = parse_model_kind(out.header.at("model").get<std::string>());
    const auto channels = out.header.at("channels").get<std::size_t>();
    const auto samples = out.header.at("window_len").get<std::size_t>();
    ShallowConvNetSpec spec;
    spec.n_classes = out.header.at("n_classes").get<int>();
    if (kind == ModelKind::Shallow) {
      const auto& s = out.header.at("spec");
      spec.n_temporal_filters = s.at("n_temporal_filters").get<int>();
      spec.temporal_kernel = s.at("temporal_kernel").get<int>();
      spec.n_spatial_filters = s.at("n_spatial_filters").get<int>();
      spec.pool_len = s.at("pool_len").get<int>();
      spec.pool_stride = s.at("pool_stride").get<int>();
      spec.dropout_p = s.at("dropout_p").get<double>();
    }
    out.model = make_classifier<float>(kind, channels, samples, spec, 0);
    fill_tensors(out, bytes, 8 + len, path);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return out;
}

#define INTENTBENCH_INSTANTIATE(T)                                                            \
  template struct ModelParams<T>;                                                             \
  template class LinearSoftmax<T>;                                                            \
  template class ShallowConvNet<T>;                                                           \
  template std::unique_ptr<Classifier<T>> make_classifier<T>(ModelKind, std::size_t,          \
                                                             std::size_t,                     \
                                                             const ShallowConvNetSpec&,       \
                                                             std::uint64_t);                  \
  template MatrixR<T> probabilities<T>(const MatrixR<T>&);                                    \
  template T loss_weighted_ce<T>(const MatrixR<T>&, std::span<const int>,                     \
                                 std::span<const double>);                                    \
  template MatrixR<T> loss_gradient<T>(const MatrixR<T>&, std::span<const int>,               \
                                       std::span<const double>);                              \
  template LossAndGradient<T> loss_and_gradient<T>(Classifier<T>&, const BatchView<T>&,       \
                                                   std::span<const int>,                      \
                                                   std::span<const double>, bool,             \
                                                   std::uint64_t);                            \
  template std::vector<CommandLabel> predict<T>(Classifier<T>&, const BatchView<T>&, std::size_t);

INTENTBENCH_INSTANTIATE(float)
INTENTBENCH_INSTANTIATE(double)

#undef INTENTBENCH_INSTANTIATE

}  // namespace intentbench
