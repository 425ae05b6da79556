#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "intentbench/errors.hpp"
#include "intentbench/models.hpp"
#include "intentbench/rng.hpp"
#include "support.hpp"

using namespace intentbench;

namespace {

template <typename T>
std::vector<T> random_batch(std::size_t n, std::size_t c, std::size_t s, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<T> x(n * c * s);
  for (auto& v : x) v = static_cast<T>(scale * rng.normal());
  return x;
}

template <typename T>
BatchView<T> view(const std::vector<T>& x, std::size_t n, std::size_t c, std::size_t s) {
  return {std::span<const T>(x), n, c, s};
}

const NamedTensor<double>& tensor(const ModelParams<double>& p, const std::string& name) {
  for (const auto& t : p.tensors) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("no tensor " + name);
}

std::vector<double> log_softmax(const std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  std::vector<double> out;
  for (double v : z) out.push_back(v - m - std::log(s));
  return out;
}

// Element-by-element reference: temporal conv, spatial conv, square, mean
// pool, log, dense, log-softmax.
std::vector<double> naive_shallow(const ModelParams<double>& p, const ShallowConvNetSpec& sp,
                                  const double* x, std::size_t c_n, std::size_t s_n) {
  const auto& wt = tensor(p, "temporal.weight").value;
  const auto& bt = tensor(p, "temporal.bias").value;
  const auto& ws = tensor(p, "spatial.weight").value;
  const auto& bs = tensor(p, "spatial.bias").value;
  const auto& wd = tensor(p, "dense.weight").value;
  const auto& bd = tensor(p, "dense.bias").value;
  const auto f_n = static_cast<std::size_t>(sp.n_temporal_filters);
  const auto k_n = static_cast<std::size_t>(sp.temporal_kernel);
  const auto g_n = static_cast<std::size_t>(sp.n_spatial_filters);
  const std::size_t l_n = s_n - k_n + 1;
  const auto p_n = static_cast<std::size_t>(sp.n_frames(static_cast<int>(s_n)));

  std::vector<double> h1(f_n * c_n * l_n);
  for (std::size_t f = 0; f < f_n; ++f)
    for (std::size_t c = 0; c < c_n; ++c)
      for (std::size_t t = 0; t < l_n; ++t) {
        double a = bt[static_cast<Eigen::Index>(f)];
        for (std::size_t k = 0; k < k_n; ++k) a += wt[static_cast<Eigen::Index>(f * k_n + k)] * x[c * s_n + t + k];
        h1[(f * c_n + c) * l_n + t] = a;
      }
  std::vector<double> feat(g_n * p_n);
  for (std::size_t g = 0; g < g_n; ++g) {
    std::vector<double> h2(l_n);
    for (std::size_t t = 0; t < l_n; ++t) {
      double a = bs[static_cast<Eigen::Index>(g)];
      for (std::size_t f = 0; f < f_n; ++f)
        for (std::size_t c = 0; c < c_n; ++c) a += ws[static_cast<Eigen::Index>((g * f_n + f) * c_n + c)] * h1[(f * c_n + c) * l_n + t];
      h2[t] = a * a;
    }
    for (std::size_t q = 0; q < p_n; ++q) {
      double a = 0.0;
      for (int j = 0; j < sp.pool_len; ++j) a += h2[q * static_cast<std::size_t>(sp.pool_stride) + static_cast<std::size_t>(j)];
      feat[g * p_n + q] = std::log(std::max(a / sp.pool_len, 1e-6));
    }
  }
  std::vector<double> z(static_cast<std::size_t>(sp.n_classes));
  for (std::size_t k = 0; k < z.size(); ++k) {
    double a = bd[static_cast<Eigen::Index>(k)];
    for (std::size_t u = 0; u < feat.size(); ++u) a += wd[static_cast<Eigen::Index>(k * feat.size() + u)] * feat[u];
    z[k] = a;
  }
  return log_softmax(z);
}

ShallowConvNetSpec small_spec() {
  ShallowConvNetSpec s;
  s.n_temporal_filters = 4;
  s.temporal_kernel = 5;
  s.n_spatial_filters = 3;
  s.pool_len = 8;
  s.pool_stride = 4;
  return s;
}

// Central finite differences over every element of every tensor; returns
// the worst relative error max|a - n| / max(|a|, |n|, floor).
double worst_gradient_error(Classifier<double>& model, const std::vector<double>& x, std::size_t n,
                            std::size_t c, std::size_t s, const std::vector<int>& y,
                            const std::vector<double>& w) {
  const auto v = view(x, n, c, s);
  const auto lg = loss_and_gradient(model, v, y, w, false, 0);
  double worst = 0.0;
  const double h = 1e-4;
  for (std::size_t ti = 0; ti < model.params().tensors.size(); ++ti) {
    auto& val = model.params().tensors[ti].value;
    for (Eigen::Index i = 0; i < val.size(); ++i) {
      const double orig = val[i];
      val[i] = orig + h;
      const double up = loss_weighted_ce(model.forward(v, false, 0), y, w);
      val[i] = orig - h;
      const double down = loss_weighted_ce(model.forward(v, false, 0), y, w);
      val[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = lg.grads.tensors[ti].value[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

}  // namespace

TEST(ShallowSpec, FrameArithmetic) {
  const ShallowConvNetSpec s;
  EXPECT_EQ(s.n_frames(125), 12);
  EXPECT_EQ(s.n_spatial_filters * s.n_frames(125), 480);
  EXPECT_NO_THROW(s.validate(125));
  EXPECT_THROW(s.validate(40), ConfigError);
  ShallowConvNetSpec bad;
  bad.dropout_p = 1.0;
  EXPECT_THROW(bad.validate(125), ConfigError);
}

TEST(ModelKind, Names) {
  EXPECT_EQ(parse_model_kind("linear"), ModelKind::Linear);
  EXPECT_EQ(parse_model_kind("shallow"), ModelKind::Shallow);
  EXPECT_THROW(parse_model_kind("eegnet"), ConfigError);
  EXPECT_EQ(model_name(ModelKind::Shallow), "shallow");
}

TEST(Linear, ZeroWeightsGiveUniform) {
  LinearSoftmax<double> m(2, 3, 5, 1);
  for (auto& t : m.params().tensors) t.value.setZero();
  const auto x = random_batch<double>(4, 2, 3, 2);
  const auto p = probabilities(m.forward(view(x, 4, 2, 3), false, 0));
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p.data()[i], 0.2, 1e-15);
}

TEST(Linear, DominantBias) {
  LinearSoftmax<double> m(2, 3, 5, 1);
  for (auto& t : m.params().tensors) t.value.setZero();
  m.params().tensors[1].value[0] = 10.0;
  const auto x = random_batch<double>(1, 2, 3, 2);
  // e^10 / (e^10 + 4): dominant, though just short of 0.9999
  const double expected = 1.0 / (1.0 + 4.0 * std::exp(-10.0));
  EXPECT_NEAR(probabilities(m.forward(view(x, 1, 2, 3), false, 0))(0, 0), expected, 1e-14);
  EXPECT_GE(expected, 0.9998);
}

TEST(Linear, MatchesScalarReference) {
  LinearSoftmax<double> m(3, 7, 5, 9);
  const auto x = random_batch<double>(6, 3, 7, 4);
  const auto lp = m.forward(view(x, 6, 3, 7), false, 0);
  const auto& w = tensor(m.params(), "dense.weight").value;
  const auto& b = tensor(m.params(), "dense.bias").value;
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<double> z(5);
    for (std::size_t k = 0; k < 5; ++k) {
      z[k] = b[static_cast<Eigen::Index>(k)];
      for (std::size_t d = 0; d < 21; ++d) z[k] += w[static_cast<Eigen::Index>(k * 21 + d)] * x[i * 21 + d];
    }
    const auto ref = log_softmax(z);
    double sum = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_NEAR(lp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), ref[k], 1e-12);
      sum += std::exp(lp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Shallow, MatchesScalarReference) {
  for (const auto& [sp, c, s] : {std::tuple{small_spec(), std::size_t{3}, std::size_t{30}},
                                 std::tuple{ShallowConvNetSpec{}, std::size_t{16}, std::size_t{125}}}) {
    ShallowConvNet<double> m(c, s, sp, 77);
    const auto x = random_batch<double>(3, c, s, 5);
    const auto lp = m.forward(view(x, 3, c, s), false, 0);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto ref = naive_shallow(m.params(), sp, x.data() + i * c * s, c, s);
      for (std::size_t k = 0; k < ref.size(); ++k) {
        EXPECT_NEAR(lp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), ref[k], 1e-9);
      }
    }
  }
}

TEST(Shallow, ZeroInputUsesLogFloorAndDenseBias) {
  ShallowConvNet<double> m(3, 30, small_spec(), 1);
  for (const char* name : {"temporal.bias", "spatial.bias"}) {
    for (auto& t : m.params().tensors) {
      if (t.name == name) t.value.setZero();
    }
  }
  const std::vector<double> x(2 * 3 * 30, 0.0);
  const auto lp = m.forward(view(x, 2, 3, 30), false, 0);
  // every feature equals log(1e-6), so logits = log(1e-6) * rowsum(W) + b
  const auto& w = tensor(m.params(), "dense.weight").value;
  const auto& b = tensor(m.params(), "dense.bias").value;
  const std::size_t units = 3 * static_cast<std::size_t>(small_spec().n_frames(30));
  std::vector<double> z(5);
  for (std::size_t k = 0; k < 5; ++k) {
    z[k] = b[static_cast<Eigen::Index>(k)];
    for (std::size_t u = 0; u < units; ++u) z[k] += std::log(1e-6) * w[static_cast<Eigen::Index>(k * units + u)];
  }
  const auto ref = log_softmax(z);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(lp(0, static_cast<Eigen::Index>(k)), ref[k], 1e-12);
    EXPECT_EQ(lp(0, static_cast<Eigen::Index>(k)), lp(1, static_cast<Eigen::Index>(k)));
  }
}

TEST(Shallow, DropoutOffIsPureAndMaskIsKeyed) {
  ShallowConvNet<double> m(3, 30, small_spec(), 2);
  const auto x = random_batch<double>(4, 3, 30, 8);
  const auto v = view(x, 4, 3, 30);
  EXPECT_EQ(m.forward(v, false, 1), m.forward(v, false, 2));
  EXPECT_EQ(m.forward(v, true, 5), m.forward(v, true, 5));
  EXPECT_NE(m.forward(v, true, 5), m.forward(v, true, 6));
}

TEST(Softmax, StableForHugeLogits) {
  LinearSoftmax<double> m(1, 1, 5, 1);
  auto& w = m.params().tensors[0].value;
  w << 1e4, -1e4, 0.0, 5e3, -5e3;
  m.params().tensors[1].value.setZero();
  const std::vector<double> x{1.0};
  const auto lp = m.forward(view(x, 1, 1, 1), false, 0);
  EXPECT_TRUE(lp.allFinite());
  EXPECT_NEAR(lp.array().exp().sum(), 1.0, 1e-9);
}

TEST(Loss, AnalyticValues) {
  MatrixR<double> uniform = MatrixR<double>::Constant(4, 5, -std::log(5.0));
  const std::vector<int> y{0, 0, 0, 0};
  const std::vector<double> ones(5, 1.0), w2{2, 1, 1, 1, 1};
  EXPECT_NEAR(loss_weighted_ce<double>(uniform, y, ones), std::log(5.0), 1e-12);
  EXPECT_NEAR(loss_weighted_ce<double>(uniform, y, w2), 2.0 * std::log(5.0), 1e-12);
  MatrixR<double> onehot = MatrixR<double>::Constant(4, 5, -1e3);
  onehot.col(0).setZero();
  EXPECT_LE(loss_weighted_ce<double>(onehot, y, ones), 1e-6);
}

TEST(Gradients, FiniteDifferenceBothModels) {
  const std::vector<int> y{0, 1, 2, 3, 4, 0, 2, 4};
  const std::vector<double> w{1.3, 0.7, 1.0, 1.1, 0.9};
  LinearSoftmax<double> lin(3, 20, 5, 3);
  const auto xl = random_batch<double>(8, 3, 20, 10);
  EXPECT_LT(worst_gradient_error(lin, xl, 8, 3, 20, y, w), 1e-4);

  ShallowConvNet<double> sh(3, 30, small_spec(), 4);
  const auto xs = random_batch<double>(8, 3, 30, 11);
  EXPECT_LT(worst_gradient_error(sh, xs, 8, 3, 30, y, w), 1e-4);
}

TEST(Gradients, DenseBiasClosedForm) {
  ShallowConvNet<double> m(3, 30, small_spec(), 5);
  const auto x = random_batch<double>(6, 3, 30, 12);
  const std::vector<int> y{4, 3, 2, 1, 0, 4};
  const std::vector<double> w{1, 2, 3, 4, 5};
  const auto lg = loss_and_gradient(m, view(x, 6, 3, 30), y, w, false, 0);
  const auto p = probabilities(m.forward(view(x, 6, 3, 30), false, 0));
  for (Eigen::Index k = 0; k < 5; ++k) {
    double expect = 0.0;
    for (Eigen::Index i = 0; i < 6; ++i) {
      const auto yi = static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
      expect += w[yi] * (p(i, k) - (static_cast<Eigen::Index>(yi) == k ? 1.0 : 0.0)) / 6.0;
    }
    EXPECT_NEAR(lg.grads.tensors.back().value[k], expect, 1e-12);
  }
}

TEST(Gradients, VanishAtZeroLoss) {
  LinearSoftmax<double> m(1, 2, 5, 1);
  for (auto& t : m.params().tensors) t.value.setZero();
  m.params().tensors[1].value[2] = 60.0;
  const std::vector<double> x{0.3, -0.2, 1.0, 0.5};
  const std::vector<int> y{2, 2};
  const auto lg = loss_and_gradient(m, view(x, 2, 1, 2), y, std::vector<double>(5, 1.0), false, 0);
  for (const auto& t : lg.grads.tensors) EXPECT_LE(t.value.norm(), 1e-8);
}

TEST(Loss, BatchPermutationInvariance) {
  ShallowConvNet<double> m(3, 30, small_spec(), 6);
  const std::size_t n = 10, per = 90;
  const auto x = random_batch<double>(n, 3, 30, 13);
  std::vector<int> y{0, 1, 2, 3, 4, 4, 3, 2, 1, 0};
  const std::vector<double> w{1, 1.5, 0.5, 1, 2};
  const double base = loss_weighted_ce(m.forward(view(x, n, 3, 30), false, 0), y, w);
  std::vector<std::size_t> perm{3, 7, 1, 9, 0, 2, 8, 5, 6, 4};
  std::vector<double> xp(x.size());
  std::vector<int> yp(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(perm[i] * per), per, xp.begin() + static_cast<std::ptrdiff_t>(i * per));
    yp[i] = y[perm[i]];
  }
  EXPECT_NEAR(loss_weighted_ce(m.forward(view(xp, n, 3, 30), false, 0), yp, w), base, 1e-12);
}

TEST(Predict, ArgmaxAndTies) {
  LinearSoftmax<double> m(1, 1, 5, 1);
  m.params().tensors[0].value.setZero();
  auto& b = m.params().tensors[1].value;
  b << std::log(0.1), std::log(0.2), std::log(0.4), std::log(0.2), std::log(0.1);
  const std::vector<double> x{0.0};
  EXPECT_EQ(predict(m, view(x, 1, 1, 1))[0], CommandLabel::Left);
  b << 1.0, 0.0, 0.0, 0.0, 1.0;
  EXPECT_EQ(predict(m, view(x, 1, 1, 1))[0], CommandLabel::Forward);
}

TEST(Predict, BatchEqualsLoop) {
  ShallowConvNet<float> m(3, 30, small_spec(), 7);
  const auto x = random_batch<float>(40, 3, 30, 14);
  const auto all = predict(m, view(x, 40, 3, 30), 16);
  for (std::size_t i = 0; i < 40; ++i) {
    const std::vector<float> one(x.begin() + static_cast<std::ptrdiff_t>(i * 90), x.begin() + static_cast<std::ptrdiff_t>((i + 1) * 90));
    EXPECT_EQ(predict(m, view(one, 1, 3, 30))[0], all[i]) << i;
  }
}

TEST(Init, GlorotBoundsAndDeterminism) {
  ShallowConvNet<double> a(16, 125, ShallowConvNetSpec{}, 42), b(16, 125, ShallowConvNetSpec{}, 42);
  for (std::size_t i = 0; i < a.params().tensors.size(); ++i) {
    EXPECT_EQ(a.params().tensors[i].value, b.params().tensors[i].value);
  }
  const auto& wd = tensor(a.params(), "dense.weight");
  EXPECT_EQ(wd.shape, (std::vector<std::size_t>{5, 480}));
  const double bound = std::sqrt(6.0 / (480.0 + 5.0));
  EXPECT_LE(wd.value.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(wd.value.cwiseAbs().maxCoeff(), 0.9 * bound);
  EXPECT_EQ(tensor(a.params(), "spatial.weight").shape, (std::vector<std::size_t>{40, 40, 16}));
}

TEST(Shapes, MismatchIsError) {
  ShallowConvNet<double> m(3, 30, small_spec(), 1);
  const auto x = random_batch<double>(2, 4, 30, 1);
  EXPECT_THROW(m.forward(view(x, 2, 4, 30), false, 0), DataError);
}

TEST(Checkpoint, RoundTripBothModels) {
  testsupport::TempDir dir("ckpt");
  for (ModelKind kind : {ModelKind::Linear, ModelKind::Shallow}) {
    auto m = make_classifier<float>(kind, 3, 30, small_spec(), 8);
    const auto path = (dir / std::string(model_name(kind))).string() + ".ckpt";
    save_checkpoint(*m, {{"seed", 8}}, path);
    const auto loaded = load_checkpoint(path);
    EXPECT_EQ(loaded.header.at("seed"), 8);
    EXPECT_EQ(loaded.model->kind(), kind);
    EXPECT_EQ(loaded.model->input_channels(), 3u);
    EXPECT_EQ(loaded.model->input_samples(), 30u);
    for (std::size_t i = 0; i < m->params().tensors.size(); ++i) {
      EXPECT_EQ(loaded.model->params().tensors[i].value, m->params().tensors[i].value);
    }
    const auto x = random_batch<float>(5, 3, 30, 9);
    EXPECT_EQ(m->forward(view(x, 5, 3, 30), false, 0), loaded.model->forward(view(x, 5, 3, 30), false, 0));

    auto bytes = testsupport::read_file(path);
    testsupport::write_file(path, bytes.substr(0, bytes.size() - 4));
    EXPECT_THROW(load_checkpoint(path), DataError);
  }
}
