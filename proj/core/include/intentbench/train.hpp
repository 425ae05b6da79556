#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "intentbench/models.hpp"
#include "intentbench/split.hpp"

namespace intentbench {

struct TrainConfig {
  int batch_size = 128;
  int epochs = 150;  // the original protocol used 2000
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Explicit per-class weights; when unset they are derived from the
  /// pre-oversampling training counts.
  std::optional<std::vector<double>> class_weights;
  /// false trains with unit weights (plain cross-entropy).
  bool weighted_loss = true;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Inverse class frequency normalised to mean 1 over the classes present;
/// absent classes get weight 1 (they never contribute to the loss).
std::vector<double> inverse_frequency_weights(const ClassCounts& counts);

/// Weights actually used for a run: explicit, derived, or all ones.
std::vector<double> resolve_class_weights(const TrainConfig& cfg, const ClassCounts& counts);

template <typename T>
class Adam {
public:
  Adam(const ModelParams<T>& params, double lr, double beta1, double beta2, double eps);

  /// One bias-corrected update of every tensor.
  void step(ModelParams<T>& params, const ModelParams<T>& grads);
  [[nodiscard]] std::uint64_t steps() const { return t_; }

private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  ModelParams<T> m_;
  ModelParams<T> v_;
};

struct TrainResult {
  std::vector<double> loss_trace;  // mean loss per epoch
  std::uint64_t steps = 0;
};

/// Mini-batch training with a seeded shuffle each epoch and dropout active.
/// Throws DivergenceError naming the epoch and batch when the loss or a
/// gradient stops being finite.
template <typename T>
TrainResult train(Classifier<T>& model, const BatchView<T>& data, std::span<const int> labels,
                  std::span<const double> class_weights, const TrainConfig& cfg);

/// Dropout key for one optimizer step; a pure function of (seed, step).
std::uint64_t dropout_key(std::uint64_t seed, std::uint64_t step) noexcept;

}  // namespace intentbench
