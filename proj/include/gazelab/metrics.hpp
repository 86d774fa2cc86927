#ifndef GAZELAB_METRICS_HPP
#define GAZELAB_METRICS_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "gazelab/tensor.hpp"

namespace gazelab::metrics {

// Discrete gaze landing points, (row, col) pixel coordinates.
struct FixationSet {
  std::vector<std::pair<std::size_t, std::size_t>> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

// Normalized scan-path saliency: standardize the map to zero mean and unit
// population standard deviation, then average the standardized values at
// the fixation points. A constant map scores 0 by convention.
double nss(const Tensor& map, const FixationSet& fix);

// Pearson correlation of two equally sized maps; both must be non-constant.
double cc(const Tensor& a, const Tensor& b);

// ROC area with fixated pixels as positives and all other pixels as
// negatives; tied saliency values earn half credit, which makes the result
// equal the exhaustive pairwise probability P(pos > neg) + P(pos == neg)/2.
// A constant map scores 0.5 by convention.
double auc_judd(const Tensor& map, const FixationSet& fix);

// Histogram intersection of the two maps after normalizing each to unit
// sum. Inputs must be non-negative with positive sums.
double sim(const Tensor& a, const Tensor& b);

// Pearson correlation of two plain sequences (same contract as cc).
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace gazelab::metrics

#endif  // GAZELAB_METRICS_HPP
