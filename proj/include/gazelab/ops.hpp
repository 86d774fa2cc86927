#ifndef GAZELAB_OPS_HPP
#define GAZELAB_OPS_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "gazelab/tensor.hpp"

namespace gazelab::ops {

// Forward/backward numeric kernels. All functions are pure: they read
// their arguments and return fresh tensors.

struct ConvGrads {
  Tensor input;       // d loss / d input
  KernelSet kernels;  // d loss / d weights and bias, same extents as kernels
};

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index of each window winner
};

// 2-D convolution, stride 1, zero "same" padding. Kernel extents must be
// odd so the padded output keeps the input's height and width.
// input: h x w x ci, output: h x w x co.
Tensor conv2d(const Tensor& input, const KernelSet& kernels);

// Analytic gradients of conv2d with respect to input, weights and bias.
ConvGrads conv2d_backward(const Tensor& input, const KernelSet& kernels,
                          const Tensor& grad_out);

// Transposed convolution, fixed 2x2 kernel, stride 2, no padding. Output is
// exactly 2h x 2w; stride-2 placements of the 2x2 kernel do not overlap.
Tensor deconv2d(const Tensor& input, const KernelSet& kernels);

ConvGrads deconv2d_backward(const Tensor& input, const KernelSet& kernels,
                            const Tensor& grad_out);

// 2x2 max pooling, stride 2. Height and width must be even. Window ties
// break to the first index in row-major scan order.
PoolResult maxpool2d(const Tensor& input);

// Routes grad_out back through recorded argmax indices.
Tensor maxpool2d_backward(const std::vector<std::size_t>& input_dims,
                          const PoolResult& pooled, const Tensor& grad_out);

Tensor relu(const Tensor& input);

// Gates grad_out by (input > 0); the derivative at exactly 0 is 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// Elementwise sum; extents must match.
Tensor add(const Tensor& a, const Tensor& b);

// Corner-aligned bilinear interpolation of a rank-2 map. Source coordinate
// for target index t is t * (src-1)/(tgt-1); a 1-extent axis maps to 0.
Tensor bilinear_resize(const Tensor& map, std::size_t target_h,
                       std::size_t target_w);

}  // namespace gazelab::ops

#endif  // GAZELAB_OPS_HPP
