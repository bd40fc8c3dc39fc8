#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bgfn::numkit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// One named dense array with its gradient and AdamW moment buffers.
/// All four matrices always share one shape.
struct Param {
  std::string name;
  std::string group;  // optimizer group, e.g. "pf", "pb", "logz"
  Matrix value;
  Matrix grad;
  Matrix moment1;
  Matrix moment2;
};

/// Ordered collection of named parameters plus the optimizer step counter.
/// Plain data: copyable, movable, safe to share read-only across threads.
class ParamSet {
 public:
  Param& add(std::string name, std::string group, Index rows, Index cols);

  [[nodiscard]] Param& at(std::string_view name);
  [[nodiscard]] const Param& at(std::string_view name) const;
  [[nodiscard]] const Param* find(std::string_view name) const;
  [[nodiscard]] bool contains(std::string_view name) const { return find(name) != nullptr; }

  [[nodiscard]] double scalar(std::string_view name) const;
  void set_scalar(std::string_view name, double value);

  [[nodiscard]] std::span<Param> params() { return params_; }
  [[nodiscard]] std::span<const Param> params() const { return params_; }

  void zero_grad();
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] std::size_t scalar_count() const;

  /// FNV-1a over names and raw value bytes. Used to prove frozen stages stay untouched.
  [[nodiscard]] std::uint64_t fingerprint() const;

  /// Value-level equality (names, groups, shapes, bit patterns of values).
  [[nodiscard]] bool values_equal(const ParamSet& other) const;

  std::int64_t step = 0;

 private:
  std::vector<Param> params_;
};

}  // namespace bgfn::numkit
