#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "bgfn/error.hpp"
#include "bgfn/numkit/adamw.hpp"
#include "bgfn/numkit/features.hpp"
#include "bgfn/numkit/logspace.hpp"
#include "bgfn/numkit/mlp.hpp"
#include "bgfn/numkit/rng.hpp"
#include "bgfn/numkit/scalar_tape.hpp"
#include "bgfn/numkit/serialize.hpp"

using namespace bgfn;
using numkit::Matrix;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Straight-line dense layer: out[r][j] = b[j] + sum_k in[r][k] * w[k][j].
std::vector<std::vector<double>> naive_layer(const std::vector<std::vector<double>>& in, const Matrix& w,
                                             const Matrix& b, bool relu) {
  std::vector<std::vector<double>> out(in.size(), std::vector<double>(static_cast<std::size_t>(w.cols())));
  for (std::size_t r = 0; r < in.size(); ++r) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      long double acc = b(0, j);
      for (Eigen::Index k = 0; k < w.rows(); ++k) {
        acc += static_cast<long double>(in[r][static_cast<std::size_t>(k)]) * w(k, j);
      }
      double v = static_cast<double>(acc);
      out[r][static_cast<std::size_t>(j)] = relu ? std::max(v, 0.0) : v;
    }
  }
  return out;
}

}  // namespace

TEST(LogSumExp, SmallCases) {
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_DOUBLE_EQ(numkit::log_sum_exp(zeros), std::log(2.0));
  const std::vector<double> big{-1000.0, -1000.0};
  EXPECT_NEAR(numkit::log_sum_exp(big), -1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> neg{-kInf, -kInf};
  EXPECT_EQ(numkit::log_sum_exp(neg), -kInf);
  EXPECT_THROW((void)numkit::log_sum_exp(std::vector<double>{}), UsageError);
}

TEST(LogSumExp, MatchesExtendedPrecisionAndShifts) {
  numkit::Rng rng(7);
  std::vector<double> v(100);
  for (auto& x : v) {
    x = numkit::uniform01(rng) * 20.0 - 10.0;
  }
  long double acc = 0.0L;
  for (double x : v) {
    acc += std::exp(static_cast<long double>(x));
  }
  const double lse = numkit::log_sum_exp(v);
  EXPECT_NEAR(lse, static_cast<double>(std::log(acc)), 1e-12 * std::abs(lse));
  std::vector<double> shifted = v;
  for (auto& x : shifted) {
    x += 123.5;
  }
  EXPECT_NEAR(numkit::log_sum_exp(shifted), lse + 123.5, 1e-12 * 130);
}

TEST(LogSpace, Helpers) {
  EXPECT_DOUBLE_EQ(numkit::log_add_exp(std::log(2.0), std::log(3.0)), std::log(5.0));
  EXPECT_EQ(numkit::log_add_exp(1.5, -kInf), 1.5);
  EXPECT_NEAR(numkit::log1m_exp(std::log(0.25)), std::log(0.75), 1e-15);
  EXPECT_THROW((void)numkit::log1m_exp(0.1), DomainError);
  EXPECT_NEAR(numkit::logit(0.94), std::log(0.94 / 0.06), 1e-14);
  EXPECT_DOUBLE_EQ(numkit::sigmoid(0.0), 0.5);
  EXPECT_GT(numkit::sigmoid(-800.0), -1.0);
  EXPECT_EQ(numkit::sigmoid(800.0), 1.0);
}

TEST(MaskedSoftmax, ZerosAndMasks) {
  std::vector<double> logits(5, 0.0);
  std::vector<double> probs(5);
  bool all[5] = {true, true, true, true, true};
  numkit::masked_softmax(logits, all, probs);
  for (double p : probs) {
    EXPECT_NEAR(p, 0.2, 1e-15);
  }
  bool two[5] = {false, true, false, true, false};
  numkit::masked_softmax(logits, two, probs);
  EXPECT_NEAR(probs[1], 0.5, 1e-15);
  EXPECT_NEAR(probs[3], 0.5, 1e-15);
  EXPECT_LT(probs[0], 1e-300);
  const std::vector<double> wild{4.0, -7.0, 30.0, 2.0, 1.0};
  bool one[5] = {false, true, false, false, false};
  numkit::masked_softmax(wild, one, probs);
  EXPECT_DOUBLE_EQ(probs[1], 1.0);
}

TEST(Features, FourierBasis) {
  const auto f0 = numkit::fourier_time_features(0.0, 8);
  ASSERT_EQ(f0.size(), 16u);
  for (int k = 0; k < 8; ++k) {
    EXPECT_EQ(f0[2 * k], 0.0);
    EXPECT_EQ(f0[2 * k + 1], 1.0);
  }
  const auto f1 = numkit::fourier_time_features(1.0, 1);
  EXPECT_NEAR(f1[0], 0.0, 1e-15);
  EXPECT_NEAR(f1[1], -1.0, 1e-15);
  const auto fq = numkit::fourier_time_features(0.25, 2);
  EXPECT_NEAR(fq[0], std::sqrt(2.0) / 2, 1e-15);
  EXPECT_NEAR(fq[1], std::sqrt(2.0) / 2, 1e-15);
  EXPECT_NEAR(fq[2], 1.0, 1e-15);
  EXPECT_NEAR(fq[3], 0.0, 1e-15);
  // Out-of-range inputs are clamped.
  EXPECT_EQ(numkit::fourier_time_features(1.7, 3), numkit::fourier_time_features(1.0, 3));
}

TEST(Features, PositionEncoding) {
  std::vector<double> pe(4);
  numkit::sinusoidal_position_encoding(3, 4, pe);
  EXPECT_NEAR(pe[0], std::sin(3.0), 1e-15);
  EXPECT_NEAR(pe[1], std::cos(3.0), 1e-15);
  EXPECT_NEAR(pe[2], std::sin(3.0 / 100.0), 1e-15);
  EXPECT_NEAR(pe[3], std::cos(3.0 / 100.0), 1e-15);
}

TEST(Mlp, ZeroAndIdentity) {
  const numkit::MlpShape shape{"n", {3, 3}};
  numkit::ParamSet params;
  numkit::Rng rng(1);
  numkit::add_mlp_params(params, shape, "g", rng);
  params.at("n.w0").value.setZero();
  params.at("n.b0").value.setZero();
  Matrix in(2, 3);
  in << 1, -2, 3, 0.5, 0, -4;
  EXPECT_TRUE(numkit::mlp_forward(params, shape, in).isZero(0.0));
  params.at("n.w0").value.setIdentity();
  EXPECT_EQ(numkit::mlp_forward(params, shape, in), in);
  EXPECT_THROW((void)numkit::mlp_forward(params, shape, Matrix::Zero(1, 4)), ConfigError);
}

TEST(Mlp, MatchesNaiveTripleLoop) {
  const numkit::MlpShape shape{"pf", {19, 32, 16, 5}};
  numkit::ParamSet params;
  numkit::Rng rng(3);
  numkit::add_mlp_params(params, shape, "pf", rng);
  Matrix in(6, 19);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      in(r, c) = numkit::uniform01(rng) * 2 - 1;
    }
  }
  const Matrix out = numkit::mlp_forward(params, shape, in);
  std::vector<std::vector<double>> x(6, std::vector<double>(19));
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 19; ++c) {
      x[r][c] = in(r, c);
    }
  }
  for (std::size_t l = 0; l < shape.layer_count(); ++l) {
    x = naive_layer(x, params.at(shape.weight_name(l)).value, params.at(shape.bias_name(l)).value,
                    l + 1 < shape.layer_count());
  }
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 5; ++c) {
      EXPECT_NEAR(out(r, c), x[r][c], 1e-12 * std::max(1.0, std::abs(x[r][c])));
    }
  }
}

TEST(Mlp, RowsIndependentOfBatch) {
  const numkit::MlpShape shape{"pf", {7, 16, 4}};
  numkit::ParamSet params;
  numkit::Rng rng(9);
  numkit::add_mlp_params(params, shape, "pf", rng);
  const Matrix batch = Matrix::Random(5, 7);
  const Matrix all = numkit::mlp_forward(params, shape, batch);
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    const Matrix one = numkit::mlp_forward(params, shape, batch.row(r));
    for (Eigen::Index c = 0; c < 4; ++c) {
      EXPECT_EQ(one(0, c), all(r, c));
    }
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  const numkit::MlpShape shape{"pf", {4, 6, 3}};
  numkit::ParamSet params;
  numkit::Rng rng(11);
  numkit::add_mlp_params(params, shape, "pf", rng);
  const Matrix in = Matrix::Random(3, 4);
  const Matrix weights = Matrix::Random(3, 3);  // loss = sum(weights .* out)
  auto loss = [&]() { return numkit::mlp_forward(params, shape, in).cwiseProduct(weights).sum(); };
  numkit::MlpTape tape;
  (void)numkit::mlp_forward(params, shape, in, &tape);
  params.zero_grad();
  (void)numkit::mlp_backward(params, shape, tape, weights);
  const double h = 1e-6;
  for (auto& p : params.params()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double saved = p.value.data()[i];
      p.value.data()[i] = saved + h;
      const double up = loss();
      p.value.data()[i] = saved - h;
      const double down = loss();
      p.value.data()[i] = saved;
      EXPECT_NEAR(p.grad.data()[i], (up - down) / (2 * h), 1e-7) << p.name << "[" << i << "]";
    }
  }
}

TEST(ScalarTape, PolynomialAndUntouched) {
  numkit::ParamSet params;
  params.add("logZ", "logz", 1, 1).value(0, 0) = 3.0;
  params.add("other", "logz", 1, 1).value(0, 0) = 1.0;
  params.zero_grad();
  numkit::ScalarTape tape;
  const auto z = tape.param(params, "logZ");
  tape.backward(tape.square(z));
  EXPECT_DOUBLE_EQ(params.at("logZ").grad(0, 0), 6.0);
  EXPECT_EQ(params.at("other").grad(0, 0), 0.0);
}

TEST(ScalarTape, OpsMatchFiniteDifferences) {
  // f(a) = mean(softplus(a)^2, log1p(exp(a)) * a, log_add_exp(a, c), log(a^2+1) - a)
  auto eval = [](double a, bool grad) {
    numkit::ScalarTape t;
    const auto x = t.leaf(a);
    const numkit::ScalarTape::Var terms[] = {
        t.square(t.softplus(x)), t.mul(t.log1p(t.exp(x)), x), t.log_add_exp_const(x, 0.3),
        t.sub(t.log(t.add_const(t.square(x), 1.0)), t.scale(t.neg(x), -1.0))};
    const auto root = t.mean(terms);
    if (grad) {
      t.backward(root);
      return t.adjoint(x);
    }
    return t.value(root);
  };
  for (double a : {-2.0, -0.3, 0.0, 0.7, 3.1}) {
    const double h = 1e-6;
    EXPECT_NEAR(eval(a, true), (eval(a + h, false) - eval(a - h, false)) / (2 * h), 1e-8);
  }
}

TEST(ScalarTape, NonFiniteNamesNode) {
  numkit::ScalarTape tape;
  const auto x = tape.leaf(-1.0, "bad input");
  const auto y = tape.log(x);
  try {
    tape.backward(y);
    FAIL() << "expected a numeric error";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("log"), std::string::npos);
  }
}

TEST(AdamW, HandTraceSingleScalar) {
  numkit::ParamSet params;
  params.add("w", "g", 1, 1).value(0, 0) = 0.5;
  numkit::AdamWConfig cfg;
  cfg.learning_rates = {{"g", 0.1}};
  cfg.weight_decay = 0.01;
  // Reference: p1 = p0 (1 - lr wd) - lr * mhat / (sqrt(vhat) + eps)
  double p = 0.5, m = 0.0, v = 0.0;
  const double grads[] = {0.3, -1.2, 0.05};
  for (int step = 1; step <= 3; ++step) {
    const double g = grads[step - 1];
    params.at("w").grad(0, 0) = g;
    numkit::adamw_step(params, cfg);
    p *= 1.0 - 0.1 * 0.01;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, step));
    const double vhat = v / (1.0 - std::pow(0.999, step));
    p -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
    EXPECT_NEAR(params.at("w").value(0, 0), p, 1e-15);
    EXPECT_EQ(params.at("w").grad(0, 0), 0.0);
  }
  EXPECT_EQ(params.step, 3);
}

TEST(AdamW, IdentityAndDecay) {
  numkit::ParamSet params;
  params.add("w", "g", 2, 2).value.setConstant(2.0);
  numkit::AdamWConfig cfg;
  cfg.learning_rates = {{"g", 0.1}};
  cfg.weight_decay = 0.0;
  numkit::adamw_step(params, cfg);
  EXPECT_TRUE((params.at("w").value.array() == 2.0).all());
  cfg.weight_decay = 0.5;
  numkit::adamw_step(params, cfg);
  EXPECT_TRUE((params.at("w").value.array() == 2.0 * (1.0 - 0.05)).all());
  cfg.learning_rates["g"] = -1.0;
  EXPECT_THROW(numkit::adamw_step(params, cfg), ConfigError);
  cfg.learning_rates = {{"other", 0.1}};
  EXPECT_THROW(numkit::adamw_step(params, cfg), ConfigError);
}

TEST(Rng, StateRoundTripAndCategorical) {
  numkit::Rng a(42);
  for (int i = 0; i < 10; ++i) {
    (void)a();
  }
  numkit::Rng b = numkit::load_rng_state(numkit::save_rng_state(a));
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a(), b());
  }
  EXPECT_THROW((void)numkit::load_rng_state("not a state"), ConfigError);
  const std::vector<double> probs{0.0, 1.0, 0.0};
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(numkit::sample_categorical(probs, a), 1u);
  }
  EXPECT_NE(numkit::derive_seed(1, 2, 3), numkit::derive_seed(1, 2, 4));
}

TEST(Serialize, BitExactRoundTrip) {
  const numkit::MlpShape shape{"pf", {5, 8, 3}};
  numkit::ParamSet params;
  numkit::Rng rng(5);
  numkit::add_mlp_params(params, shape, "pf", rng);
  params.add("logZ", "logz", 1, 1).value(0, 0) = 1.0 / 3.0;
  params.at("pf.w0").moment1.setConstant(std::nextafter(1.0, 2.0));
  params.step = 17;
  const auto back = numkit::param_set_from_json(numkit::param_set_to_json(params));
  EXPECT_TRUE(back.values_equal(params));
  EXPECT_EQ(back.fingerprint(), params.fingerprint());
  EXPECT_EQ(back.step, 17);
  EXPECT_EQ(back.at("pf.w0").moment1(0, 0), std::nextafter(1.0, 2.0));
}
