#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "intentbench/session.hpp"

namespace intentbench {

enum class ModelKind { Linear, Shallow };
std::string_view model_name(ModelKind k) noexcept;
/// "linear" or "shallow"; throws ConfigError otherwise.
ModelKind parse_model_kind(std::string_view name);

struct ShallowConvNetSpec {
  int n_temporal_filters = 40;
  int temporal_kernel = 13;
  int n_spatial_filters = 40;
  int pool_len = 35;
  int pool_stride = 7;
  double dropout_p = 0.5;
  int n_classes = kNumClasses;

  /// Throws ConfigError when the spec does not fit windows of `window_len`.
  void validate(int window_len) const;
  /// floor((S - kernel + 1 - pool_len) / stride) + 1
  [[nodiscard]] int n_frames(int window_len) const;
};

template <typename T>
using MatrixR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  VectorX<T> value;  // flattened row-major
};

/// Flat list of named tensors; order and shapes are fixed at construction.
template <typename T>
struct ModelParams {
  std::vector<NamedTensor<T>> tensors;

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] bool all_finite() const;
  /// Same shapes, zero values.
  [[nodiscard]] ModelParams zeros_like() const;
};

/// Contiguous batch of windows, row-major [n, C, S].
template <typename T>
struct BatchView {
  std::span<const T> data;
  std::size_t n = 0;
  std::size_t channels = 0;
  std::size_t samples = 0;
};

/// Common surface of both reference classifiers. forward() caches what
/// backward() needs, so calls must alternate forward -> backward.
template <typename T>
class Classifier {
public:
  virtual ~Classifier() = default;

  [[nodiscard]] virtual ModelKind kind() const = 0;
  [[nodiscard]] virtual std::size_t n_classes() const = 0;
  [[nodiscard]] virtual std::size_t input_channels() const = 0;
  [[nodiscard]] virtual std::size_t input_samples() const = 0;

  /// Log-probabilities [n, K] via max-shifted log-sum-exp. Dropout applies
  /// only with train_mode; its mask is a pure function of dropout_key.
  virtual MatrixR<T> forward(const BatchView<T>& x, bool train_mode, std::uint64_t dropout_key) = 0;

  /// Accumulates gradients of the last forward() w.r.t. every parameter
  /// given d(loss)/d(logits).
  virtual void backward(const MatrixR<T>& dlogits, ModelParams<T>& grads) = 0;

  ModelParams<T>& params() { return params_; }
  [[nodiscard]] const ModelParams<T>& params() const { return params_; }

protected:
  ModelParams<T> params_;
};

template <typename T>
class LinearSoftmax final : public Classifier<T> {
public:
  LinearSoftmax(std::size_t channels, std::size_t samples, std::size_t n_classes, std::uint64_t seed);

  [[nodiscard]] ModelKind kind() const override { return ModelKind::Linear; }
  [[nodiscard]] std::size_t n_classes() const override { return n_classes_; }
  [[nodiscard]] std::size_t input_channels() const override { return channels_; }
  [[nodiscard]] std::size_t input_samples() const override { return samples_; }
  MatrixR<T> forward(const BatchView<T>& x, bool train_mode, std::uint64_t dropout_key) override;
  void backward(const MatrixR<T>& dlogits, ModelParams<T>& grads) override;

private:
  std::size_t channels_;
  std::size_t samples_;
  std::size_t dim_;
  std::size_t n_classes_;
  MatrixR<T> input_;
};

template <typename T>
class ShallowConvNet final : public Classifier<T> {
public:
  ShallowConvNet(std::size_t channels, std::size_t samples, const ShallowConvNetSpec& spec,
                 std::uint64_t seed);

  [[nodiscard]] ModelKind kind() const override { return ModelKind::Shallow; }
  [[nodiscard]] std::size_t n_classes() const override {
    return static_cast<std::size_t>(spec_.n_classes);
  }
  [[nodiscard]] std::size_t input_channels() const override { return channels_; }
  [[nodiscard]] std::size_t input_samples() const override { return samples_; }
  [[nodiscard]] const ShallowConvNetSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t n_frames() const { return frames_; }

  MatrixR<T> forward(const BatchView<T>& x, bool train_mode, std::uint64_t dropout_key) override;
  void backward(const MatrixR<T>& dlogits, ModelParams<T>& grads) override;

private:
  ShallowConvNetSpec spec_;
  std::size_t channels_;
  std::size_t samples_;
  std::size_t conv_len_;  // S - kernel + 1
  std::size_t frames_;
  // forward cache
  std::size_t batch_ = 0;
  MatrixR<T> columns_;    // (C*K) x (B*L)
  MatrixR<T> combined_;   // G x (C*K)
  MatrixR<T> conv_out_;   // G x (B*L)
  MatrixR<T> pooled_;     // B x (G*P), before the log
  MatrixR<T> features_;   // B x (G*P), after log and dropout
  MatrixR<T> mask_;       // B x (G*P), dropout scale per unit
};

template <typename T>
std::unique_ptr<Classifier<T>> make_classifier(ModelKind kind, std::size_t channels,
                                               std::size_t samples, const ShallowConvNetSpec& spec,
                                               std::uint64_t seed);

/// Row-wise exp of log-probabilities.
template <typename T>
MatrixR<T> probabilities(const MatrixR<T>& log_probs);

/// Mean over the batch of w[y] * (-log p[y]).
template <typename T>
T loss_weighted_ce(const MatrixR<T>& log_probs, std::span<const int> labels,
                   std::span<const double> class_weights);

/// d(loss_weighted_ce)/d(logits) = w[y] / n * (p - onehot(y)).
template <typename T>
MatrixR<T> loss_gradient(const MatrixR<T>& log_probs, std::span<const int> labels,
                         std::span<const double> class_weights);

template <typename T>
struct LossAndGradient {
  T loss;
  ModelParams<T> grads;
};

/// One forward/backward pass over a batch.
template <typename T>
LossAndGradient<T> loss_and_gradient(Classifier<T>& model, const BatchView<T>& x,
                                     std::span<const int> labels,
                                     std::span<const double> class_weights, bool train_mode,
                                     std::uint64_t dropout_key);

/// Argmax of the class probabilities with dropout off; ties go to the
/// lowest class code.
template <typename T>
std::vector<CommandLabel> predict(Classifier<T>& model, const BatchView<T>& x,
                                  std::size_t chunk = 256);

/// Checkpoint: little-endian u64 header length, JSON header, f32 blob.
void save_checkpoint(const Classifier<float>& model, const nlohmann::json& header_extra,
                     const std::string& path);

struct LoadedCheckpoint {
  std::unique_ptr<Classifier<float>> model;
  nlohmann::json header;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace intentbench
