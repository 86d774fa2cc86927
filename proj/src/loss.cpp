#include "gazelab/loss.hpp"

#include <cmath>

namespace gazelab::loss {

namespace {

void check_pair(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_dims(gt))
    throw ShapeError("loss: pred and gt extents do not match");
  for (double g : gt.values())
    if (!(g >= 0.0 && g <= 1.0))
      throw DomainError("loss: ground truth outside [0,1]");
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "ead") return LossKind::EAD;
  if (name == "l1") return LossKind::L1;
  if (name == "l2") return LossKind::L2;
  if (name == "bce") return LossKind::BCE;
  throw ConfigError("unknown loss kind: " + name);
}

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::EAD: return "ead";
    case LossKind::L1: return "l1";
    case LossKind::L2: return "l2";
    case LossKind::BCE: return "bce";
  }
  return "?";
}

double loss_value(const LossSpec& spec, const Tensor& pred, const Tensor& gt) {
  check_pair(pred, gt);
  const double* p = pred.data();
  const double* g = gt.data();
  const std::size_t n = pred.size();
  double total = 0.0;
  switch (spec.kind) {
    case LossKind::EAD:
      for (std::size_t i = 0; i < n; ++i) {
        const double term = std::exp(std::abs(p[i] - g[i])) - 1.0;
        if (!std::isfinite(term))
          throw NumericError("EAD: exp overflow, |pred - gt| too large");
        total += term;
      }
      break;
    case LossKind::L1:
      for (std::size_t i = 0; i < n; ++i) total += std::abs(p[i] - g[i]);
      break;
    case LossKind::L2:
      for (std::size_t i = 0; i < n; ++i) {
        const double d = p[i] - g[i];
        total += d * d;
      }
      break;
    case LossKind::BCE:
      // max(x,0) - x*g + log(1 + exp(-|x|)) is exact and never overflows.
      for (std::size_t i = 0; i < n; ++i) {
        const double x = p[i];
        total += (x > 0.0 ? x : 0.0) - x * g[i] + std::log1p(std::exp(-std::abs(x)));
      }
      break;
  }
  if (!std::isfinite(total)) throw NumericError("loss: non-finite total");
  return spec.reduction == Reduction::Mean ? total / static_cast<double>(n)
                                           : total;
}

Tensor loss_grad(const LossSpec& spec, const Tensor& pred, const Tensor& gt) {
  check_pair(pred, gt);
  const double* p = pred.data();
  const double* g = gt.data();
  const std::size_t n = pred.size();
  Tensor grad(pred.dims());
  double* out = grad.data();
  switch (spec.kind) {
    case LossKind::EAD:
      for (std::size_t i = 0; i < n; ++i) {
        const double d = p[i] - g[i];
        if (d == 0.0) {
          out[i] = 0.0;
          continue;
        }
        const double m = std::exp(std::abs(d));
        if (!std::isfinite(m))
          throw NumericError("EAD: exp overflow, |pred - gt| too large");
        out[i] = d > 0.0 ? m : -m;
      }
      break;
    case LossKind::L1:
      for (std::size_t i = 0; i < n; ++i) {
        const double d = p[i] - g[i];
        out[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      }
      break;
    case LossKind::L2:
      for (std::size_t i = 0; i < n; ++i) out[i] = 2.0 * (p[i] - g[i]);
      break;
    case LossKind::BCE:
      for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(p[i]) - g[i];
      break;
  }
  if (spec.reduction == Reduction::Mean) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
  }
  return grad;
}

}  // namespace gazelab::loss
