#include "bgfn/numkit/param_set.hpp"

#include <algorithm>
#include <cstring>

#include "bgfn/error.hpp"

namespace bgfn::numkit {

Param& ParamSet::add(std::string name, std::string group, Index rows, Index cols) {
  if (contains(name)) {
    throw ConfigError("duplicate parameter name: " + name);
  }
  Param p;
  p.name = std::move(name);
  p.group = std::move(group);
  p.value = Matrix::Zero(rows, cols);
  p.grad = Matrix::Zero(rows, cols);
  p.moment1 = Matrix::Zero(rows, cols);
  p.moment2 = Matrix::Zero(rows, cols);
  params_.push_back(std::move(p));
  return params_.back();
}

const Param* ParamSet::find(std::string_view name) const {
  auto it = std::find_if(params_.begin(), params_.end(),
                         [&](const Param& p) { return p.name == name; });
  return it == params_.end() ? nullptr : &*it;
}

const Param& ParamSet::at(std::string_view name) const {
  const Param* p = find(name);
  if (p == nullptr) {
    throw ConfigError("unknown parameter: " + std::string(name));
  }
  return *p;
}

Param& ParamSet::at(std::string_view name) {
  return const_cast<Param&>(std::as_const(*this).at(name));
}

double ParamSet::scalar(std::string_view name) const {
  const Param& p = at(name);
  if (p.value.size() != 1) {
    throw ConfigError("parameter is not a scalar: " + p.name);
  }
  return p.value(0, 0);
}

void ParamSet::set_scalar(std::string_view name, double value) {
  Param& p = at(name);
  if (p.value.size() != 1) {
    throw ConfigError("parameter is not a scalar: " + p.name);
  }
  p.value(0, 0) = value;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) {
    p.grad.setZero();
  }
}

bool ParamSet::all_finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](const Param& p) { return p.value.allFinite(); });
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

std::uint64_t ParamSet::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : params_) {
    mix(p.name.data(), p.name.size());
    mix(p.value.data(), sizeof(double) * static_cast<std::size_t>(p.value.size()));
  }
  return h;
}

bool ParamSet::values_equal(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Param& a = params_[i];
    const Param& b = other.params_[i];
    if (a.name != b.name || a.group != b.group || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
    if (std::memcmp(a.value.data(), b.value.data(),
                    sizeof(double) * static_cast<std::size_t>(a.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace bgfn::numkit
