#include "gazelab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gazelab::metrics {

namespace {

void require_map(const Tensor& t, const char* who) {
  if (t.rank() != 2)
    throw ShapeError(std::string(who) + ": expected rank-2 map");
}

void require_in_bounds(const Tensor& map, const FixationSet& fix,
                       const char* who) {
  for (const auto& [r, c] : fix.points)
    if (r >= map.dim(0) || c >= map.dim(1))
      throw DomainError(std::string(who) + ": fixation out of bounds");
}

}  // namespace

double nss(const Tensor& map, const FixationSet& fix) {
  require_map(map, "nss");
  if (fix.empty()) throw DomainError("nss: empty fixation set");
  require_in_bounds(map, fix, "nss");

  if (map.min_value() == map.max_value()) return 0.0;  // degenerate map

  const std::size_t n = map.size();
  const double mean = map.sum() / static_cast<double>(n);
  double var = 0.0;
  for (double v : map.values()) {
    const double d = v - mean;
    var += d * d;
  }
  const double sigma = std::sqrt(var / static_cast<double>(n));

  double acc = 0.0;
  for (const auto& [r, c] : fix.points) acc += (map.at(r, c) - mean) / sigma;
  return acc / static_cast<double>(fix.size());
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.empty())
    throw ShapeError("pearson: sequences must be equal length and non-empty");
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  if (*xmin == *xmax || *ymin == *ymax)
    throw DomainError("pearson: correlation undefined for constant input");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

double cc(const Tensor& a, const Tensor& b) {
  require_map(a, "cc");
  require_map(b, "cc");
  if (!a.same_dims(b)) throw ShapeError("cc: extents do not match");
  return pearson(a.values(), b.values());
}

double auc_judd(const Tensor& map, const FixationSet& fix) {
  require_map(map, "auc_judd");
  if (fix.empty()) throw DomainError("auc_judd: empty fixation set");
  require_in_bounds(map, fix, "auc_judd");

  // A pixel is either fixated or not; duplicate fixation points collapse.
  std::set<std::size_t> fixated;
  for (const auto& [r, c] : fix.points) fixated.insert(r * map.dim(1) + c);

  const std::size_t npos = fixated.size();
  const std::size_t nneg = map.size() - npos;
  if (nneg == 0) return 0.5;  // no negatives: chance by convention

  // Sweep thresholds over all distinct values. Between consecutive ROC
  // points the curve is integrated trapezoidally, which credits each
  // pos/neg tie exactly one half; the sum below is that integral in exact
  // integer arithmetic.
  std::vector<std::pair<double, bool>> entries;
  entries.reserve(map.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    entries.emplace_back(map[i], fixated.count(i) > 0);
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  std::uint64_t wins2 = 0;  // 2 * #(pos > neg) + #(pos == neg)
  std::uint64_t pos_above = 0;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    std::uint64_t pos_here = 0, neg_here = 0;
    while (j < entries.size() && entries[j].first == entries[i].first) {
      if (entries[j].second)
        ++pos_here;
      else
        ++neg_here;
      ++j;
    }
    wins2 += neg_here * (2 * pos_above + pos_here);
    pos_above += pos_here;
    i = j;
  }
  return static_cast<double>(wins2) /
         (2.0 * static_cast<double>(npos) * static_cast<double>(nneg));
}

double sim(const Tensor& a, const Tensor& b) {
  require_map(a, "sim");
  require_map(b, "sim");
  if (!a.same_dims(b)) throw ShapeError("sim: extents do not match");
  for (double v : a.values())
    if (v < 0.0) throw DomainError("sim: negative values");
  for (double v : b.values())
    if (v < 0.0) throw DomainError("sim: negative values");
  const double sa = a.sum();
  const double sb = b.sum();
  if (sa <= 0.0 || sb <= 0.0) throw DomainError("sim: zero-sum map");

  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::min(a[i] / sa, b[i] / sb);
  return acc;
}

}  // namespace gazelab::metrics
