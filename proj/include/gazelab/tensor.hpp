#ifndef GAZELAB_TENSOR_HPP
#define GAZELAB_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "gazelab/error.hpp"

namespace gazelab {

// Dense rank-1..4 tensor of doubles. Feature maps use height x width x
// channels order; storage is row-major with the last extent contiguous.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims)
      : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

  Tensor(std::vector<std::size_t> dims, std::vector<double> values)
      : dims_(std::move(dims)), data_(std::move(values)) {
    if (data_.size() != checked_size(dims_))
      throw ShapeError("tensor data length does not match extents");
  }

  Tensor(std::size_t d0, std::size_t d1)
      : Tensor(std::vector<std::size_t>{d0, d1}) {}
  Tensor(std::size_t d0, std::size_t d1, std::size_t d2)
      : Tensor(std::vector<std::size_t>{d0, d1, d2}) {}
  Tensor(std::size_t d0, std::size_t d1, std::size_t d2, std::size_t d3)
      : Tensor(std::vector<std::size_t>{d0, d1, d2, d3}) {}

  static Tensor zeros(std::initializer_list<std::size_t> dims) {
    return Tensor(std::vector<std::size_t>(dims));
  }

  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_[i]; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // rank-2 (h, w)
  double at(std::size_t y, std::size_t x) const {
    return data_[y * dims_[1] + x];
  }
  double& at(std::size_t y, std::size_t x) {
    return data_[y * dims_[1] + x];
  }

  // rank-3 (h, w, c)
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * dims_[1] + x) * dims_[2] + c];
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * dims_[1] + x) * dims_[2] + c];
  }

  // rank-4 (kh, kw, ci, co)
  double at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }
  double& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }

  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double min_value() const;
  double max_value() const;
  double sum() const;

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& dims) {
    if (dims.empty() || dims.size() > 4)
      throw ShapeError("tensor rank must be 1..4");
    std::size_t n = 1;
    for (std::size_t d : dims) {
      if (d == 0) throw ShapeError("tensor extent must be positive");
      n *= d;
    }
    return n;
  }

  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

// Convolution parameters: weights kh x kw x in_channels x out_channels,
// one bias per output channel.
struct KernelSet {
  Tensor weights;
  std::vector<double> bias;

  KernelSet() = default;
  KernelSet(std::size_t kh, std::size_t kw, std::size_t in_ch,
            std::size_t out_ch)
      : weights(std::vector<std::size_t>{kh, kw, in_ch, out_ch}),
        bias(out_ch, 0.0) {
    if (kh < 1 || kw < 1 || in_ch < 1 || out_ch < 1)
      throw ShapeError("kernel extents must be >= 1");
  }

  std::size_t kh() const { return weights.dim(0); }
  std::size_t kw() const { return weights.dim(1); }
  std::size_t in_channels() const { return weights.dim(2); }
  std::size_t out_channels() const { return weights.dim(3); }
  std::size_t param_count() const { return weights.size() + bias.size(); }
};

void ensure_finite(const Tensor& t, const std::string& context);

}  // namespace gazelab

#endif  // GAZELAB_TENSOR_HPP
