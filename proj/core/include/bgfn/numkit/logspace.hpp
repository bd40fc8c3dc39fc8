#pragma once

#include <span>
#include <vector>

namespace bgfn::numkit {

inline constexpr double kMaskedLogit = -1e9;

/// log(sum_i exp(v_i)). Returns -inf when every entry is -inf.
/// Throws UsageError on an empty input.
double log_sum_exp(std::span<const double> values);

/// log(exp(a) + exp(b)); either argument may be -inf.
double log_add_exp(double a, double b);

/// log((1/n) sum_i exp(v_i)).
double log_mean_exp(std::span<const double> values);

/// log(1 - exp(x)) for x <= 0, accurate near both ends.
double log1m_exp(double x);

double logit(double p);

/// Numerically stable logistic function.
double sigmoid(double x);

/// In-place masked softmax of one row of logits: masked entries get
/// kMaskedLogit added before normalization. Returns the log normalizer.
double masked_softmax(std::span<const double> logits, std::span<const bool> mask,
                      std::span<double> probs_out);

}  // namespace bgfn::numkit
