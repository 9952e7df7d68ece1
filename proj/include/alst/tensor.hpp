#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "alst/errors.hpp"

namespace alst {

// Dense row-major tensor of doubles. Rank is 1 or 2 everywhere in this
// codebase; scalars use shape {1}.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    data_.assign(count(shape_), 0.0);
  }

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size())
      throw ContractError("tensor: shape " + shape_str() + " does not match data length " +
                          std::to_string(data_.size()));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  // Rank-2 accessors; a rank-1 tensor counts as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  void fill(double v) { data_.assign(data_.size(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace alst
