#include "bgfn/numkit/logspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgfn/error.hpp"

namespace bgfn::numkit {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    throw UsageError("log_sum_exp: empty input");
  }
  const double max_value = *std::max_element(values.begin(), values.end());
  if (std::isinf(max_value)) {
    return max_value;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += std::exp(v - max_value);
  }
  return max_value + std::log(sum);
}

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == kNegInf) {
    return kNegInf;
  }
  return hi + std::log1p(std::exp(lo - hi));
}

double log_mean_exp(std::span<const double> values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

double log1m_exp(double x) {
  if (x > 0.0) {
    throw DomainError("log1m_exp: argument must be <= 0");
  }
  // Maechler's split point.
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double masked_softmax(std::span<const double> logits, std::span<const bool> mask,
                      std::span<double> probs_out) {
  const std::size_t n = logits.size();
  double max_value = kNegInf;
  for (std::size_t a = 0; a < n; ++a) {
    const double z = mask[a] ? logits[a] : logits[a] + kMaskedLogit;
    probs_out[a] = z;
    max_value = std::max(max_value, z);
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    probs_out[a] = std::exp(probs_out[a] - max_value);
    sum += probs_out[a];
  }
  for (std::size_t a = 0; a < n; ++a) {
    probs_out[a] /= sum;
  }
  return max_value + std::log(sum);
}

}  // namespace bgfn::numkit
