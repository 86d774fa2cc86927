#ifndef GAZELAB_LOSS_HPP
#define GAZELAB_LOSS_HPP

#include <string>

#include "gazelab/tensor.hpp"

namespace gazelab::loss {

enum class LossKind { EAD, L1, L2, BCE };

enum class Reduction { Sum, Mean };

struct LossSpec {
  LossKind kind = LossKind::EAD;
  Reduction reduction = Reduction::Sum;
};

LossKind loss_kind_from_name(const std::string& name);
std::string loss_kind_name(LossKind kind);

// Pixel-wise training losses against a ground-truth map with values in
// [0, 1]. BCE interprets predictions as logits (pre-sigmoid) and is
// evaluated in the numerically stable logit form; the others compare raw
// values:
//   EAD = sum(exp|p - g| - 1)    L1 = sum|p - g|    L2 = sum (p - g)^2
// Mean reduction divides by the pixel count.
double loss_value(const LossSpec& spec, const Tensor& pred, const Tensor& gt);

// Elementwise analytic derivative with respect to pred. The EAD and L1
// subgradient at p == g is 0.
Tensor loss_grad(const LossSpec& spec, const Tensor& pred, const Tensor& gt);

}  // namespace gazelab::loss

#endif  // GAZELAB_LOSS_HPP
