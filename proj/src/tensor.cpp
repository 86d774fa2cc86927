#include "gazelab/tensor.hpp"

#include <algorithm>

namespace gazelab {

double Tensor::min_value() const {
  return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max_value() const {
  return *std::max_element(data_.begin(), data_.end());
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

void ensure_finite(const Tensor& t, const std::string& context) {
  if (!t.all_finite())
    throw NumericError(context + ": non-finite value encountered");
}

}  // namespace gazelab
