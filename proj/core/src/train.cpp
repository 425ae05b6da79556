#include "intentbench/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "intentbench/errors.hpp"
#include "intentbench/rng.hpp"

namespace intentbench {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be a finite value >= 0");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train.adam_beta1 and adam_beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (class_weights) {
    if (class_weights->size() != static_cast<std::size_t>(kNumClasses)) {
      throw ConfigError("train.class_weights needs one weight per class");
    }
    for (double w : *class_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("train.class_weights must be finite and > 0");
    }
  }
}

std::vector<double> inverse_frequency_weights(const ClassCounts& counts) {
  std::vector<double> w(counts.size(), 1.0);
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) continue;
    w[k] = 1.0 / static_cast<double>(counts[k]);
    sum += w[k];
    ++present;
  }
  if (present == 0) return std::vector<double>(counts.size(), 1.0);
  const double scale = static_cast<double>(present) / sum;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] != 0) w[k] *= scale;
  }
  return w;
}

std::vector<double> resolve_class_weights(const TrainConfig& cfg, const ClassCounts& counts) {
  if (cfg.class_weights) return *cfg.class_weights;
  if (!cfg.weighted_loss) return std::vector<double>(counts.size(), 1.0);
  return inverse_frequency_weights(counts);
}

std::uint64_t dropout_key(std::uint64_t seed, std::uint64_t step) noexcept {
  return splitmix64(splitmix64(seed ^ 0x6472'6f70'6f75'7421ULL) + step);
}

template <typename T>
Adam<T>::Adam(const ModelParams<T>& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(params.zeros_like()), v_(params.zeros_like()) {}

template <typename T>
void Adam<T>::step(ModelParams<T>& params, const ModelParams<T>& grads) {
  ++t_;
  const auto t = static_cast<double>(t_);
  const T b1 = static_cast<T>(beta1_);
  const T b2 = static_cast<T>(beta2_);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(beta1_, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(beta2_, t)));
  const T lr = static_cast<T>(lr_);
  const T eps = static_cast<T>(eps_);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto& p = params.tensors[i].value;
    const auto& g = grads.tensors[i].value;
    auto& m = m_.tensors[i].value;
    auto& v = v_.tensors[i].value;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      m(j) = b1 * m(j) + (T(1) - b1) * g(j);
      v(j) = b2 * v(j) + (T(1) - b2) * g(j) * g(j);
      p(j) -= lr * (m(j) * c1) / (std::sqrt(v(j) * c2) + eps);
    }
  }
}

template <typename T>
TrainResult train(Classifier<T>& model, const BatchView<T>& data, std::span<const int> labels,
                  std::span<const double> class_weights, const TrainConfig& cfg) {
  cfg.validate();
  if (data.n == 0) throw DataError("cannot train on an empty training set");
  if (labels.size() != data.n) throw DataError("label count does not match window count");
  if (class_weights.size() != model.n_classes()) throw ConfigError("class weight count does not match model");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.n_classes()) throw DataError("label out of range");
  }

  const std::size_t per = data.channels * data.samples;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  Adam<T> opt(model.params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<T> xbuf;
  std::vector<int> ybuf;

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < data.n; start += batch, ++b) {
      const std::size_t n = std::min(batch, data.n - start);
      xbuf.resize(n * per);
      ybuf.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[start + k];
        std::copy_n(data.data.begin() + static_cast<std::ptrdiff_t>(src * per), per,
                    xbuf.begin() + static_cast<std::ptrdiff_t>(k * per));
        ybuf[k] = labels[src];
      }
      const BatchView<T> view{xbuf, n, data.channels, data.samples};
      auto lg = loss_and_gradient(model, view, ybuf, class_weights, true,
                                  dropout_key(cfg.rng_seed, opt.steps()));
      if (!std::isfinite(static_cast<double>(lg.loss)) || !lg.grads.all_finite()) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                              std::to_string(b + 1) + " (non-finite loss or gradient; learning rate " +
                              std::to_string(cfg.learning_rate) + ")");
      }
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(n);
      opt.step(model.params(), lg.grads);
    }
    result.loss_trace.push_back(loss_sum / static_cast<double>(data.n));
  }
  if (!model.params().all_finite()) throw DivergenceError("training produced non-finite parameters");
  result.steps = opt.steps();
  return result;
}

template class Adam<float>;
template class Adam<double>;
template TrainResult train<float>(Classifier<float>&, const BatchView<float>&, std::span<const int>,
                                  std::span<const double>, const TrainConfig&);
template TrainResult train<double>(Classifier<double>&, const BatchView<double>&, std::span<const int>,
                                   std::span<const double>, const TrainConfig&);

}  // namespace intentbench
