#include "gazelab/dissect.hpp"

#include <algorithm>
#include <map>

#include "gazelab/error.hpp"
#include "gazelab/metrics.hpp"
#include "gazelab/ops.hpp"

namespace gazelab::dissect {

FeatureSource feature_source(const nn::Network& net) {
  return [&net](const Tensor& image) {
    return nn::encoder_features(net, image);
  };
}

Tensor channel_map(const Tensor& features, std::size_t unit) {
  if (features.rank() != 3)
    throw ShapeError("channel_map: features must be rank 3");
  if (unit >= features.dim(2))
    throw ShapeError("channel_map: unit index out of range");
  const std::size_t m = features.dim(0), n = features.dim(1);
  Tensor map(m, n);
  for (std::size_t y = 0; y < m; ++y)
    for (std::size_t x = 0; x < n; ++x) map.at(y, x) = features.at(y, x, unit);
  return map;
}

namespace {

std::vector<Tensor> compute_features(const FeatureSource& features,
                                     const std::vector<Tensor>& images) {
  std::vector<Tensor> feats;
  feats.reserve(images.size());
  for (const Tensor& img : images) {
    Tensor f = features(img);
    if (f.rank() != 3)
      throw ShapeError("dissect: feature source must produce rank-3 tensors");
    if (!feats.empty() && f.dim(2) != feats.front().dim(2))
      throw ShapeError("dissect: inconsistent channel counts across images");
    feats.push_back(std::move(f));
  }
  return feats;
}

double top5_mean(std::vector<double> nss_values) {
  std::sort(nss_values.begin(), nss_values.end(), std::greater<>());
  const std::size_t take = std::min<std::size_t>(5, nss_values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += nss_values[i];
  return sum / static_cast<double>(take);
}

}  // namespace

std::vector<UnitScore> unit_nss_scores(const FeatureSource& features,
                                       const std::vector<GazeSample>& data) {
  if (data.empty()) throw ConfigError("unit_nss_scores: dataset is empty");

  std::vector<Tensor> images;
  images.reserve(data.size());
  for (const auto& s : data) images.push_back(s.image);
  const std::vector<Tensor> feats = compute_features(features, images);
  const std::size_t units = feats.front().dim(2);

  std::vector<UnitScore> scores(units);
  for (std::size_t u = 0; u < units; ++u) {
    UnitScore& score = scores[u];
    score.unit_index = u;
    std::vector<double> values;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Tensor map = ops::bilinear_resize(channel_map(feats[i], u),
                                              data[i].image.dim(0),
                                              data[i].image.dim(1));
      const double v = metrics::nss(map, data[i].fixations);
      score.per_image_nss.emplace_back(i, v);
      values.push_back(v);
    }
    score.top5_mean = top5_mean(std::move(values));
  }

  double lo = scores.front().top5_mean, hi = lo;
  for (const auto& s : scores) {
    lo = std::min(lo, s.top5_mean);
    hi = std::max(hi, s.top5_mean);
  }
  for (auto& s : scores)
    s.normalized_score = hi > lo ? (s.top5_mean - lo) / (hi - lo) : 0.0;
  return scores;
}

std::vector<UnitScore> unit_nss_scores(const nn::Network& net,
                                       const std::vector<GazeSample>& data) {
  return unit_nss_scores(feature_source(net), data);
}

std::vector<std::size_t> select_positive_detectors(
    const std::vector<UnitScore>& scores, double T) {
  std::vector<std::size_t> out;
  for (const auto& s : scores)
    if (s.normalized_score >= T) out.push_back(s.unit_index);
  std::sort(out.begin(), out.end());
  return out;
}

double unit_threshold(std::vector<double> values) {
  if (values.empty())
    throw DomainError("unit_threshold: empty value collection");
  std::sort(values.begin(), values.end());
  // Largest count of values allowed to strictly exceed T_k: 0.5% of n.
  const std::size_t k_max = values.size() / 200;
  return values[values.size() - 1 - k_max];
}

DissectionReport dissect_units(const FeatureSource& features,
                               const std::vector<LabeledSample>& data,
                               const std::vector<std::size_t>& units,
                               double iou_floor) {
  if (data.empty()) throw ConfigError("dissect_units: dataset is empty");

  std::vector<Tensor> images;
  images.reserve(data.size());
  for (const auto& s : data) {
    images.push_back(s.image);
    for (const auto& [cls, mask] : s.masks)
      if (mask.rank() != 2 || mask.dim(0) != s.image.dim(0) ||
          mask.dim(1) != s.image.dim(1))
        throw ShapeError("dissect_units: mask extents must match the image");
  }
  const std::vector<Tensor> feats = compute_features(features, images);
  const std::size_t channel_count = feats.front().dim(2);

  // f_t(c): images where the class has at least one set pixel.
  std::map<std::string, std::size_t> f_t;
  for (const auto& s : data)
    for (const auto& [cls, mask] : s.masks)
      if (mask.max_value() > 0.0) f_t[cls] += 1;

  std::map<std::string, std::size_t> f_d;
  DissectionReport report;

  for (std::size_t u : units) {
    if (u >= channel_count)
      throw ShapeError("dissect_units: unit index out of range");

    std::vector<double> all_values;
    for (const Tensor& f : feats)
      for (std::size_t y = 0; y < f.dim(0); ++y)
        for (std::size_t x = 0; x < f.dim(1); ++x)
          all_values.push_back(f.at(y, x, u));
    const double tk = unit_threshold(std::move(all_values));

    // Binarize the resized activation of every image once.
    std::vector<std::vector<char>> bins(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Tensor resized = ops::bilinear_resize(
          channel_map(feats[i], u), data[i].image.dim(0),
          data[i].image.dim(1));
      std::vector<char>& bin = bins[i];
      bin.resize(resized.size());
      for (std::size_t p = 0; p < resized.size(); ++p)
        bin[p] = resized[p] > tk ? 1 : 0;
    }

    // Dataset-level IOU per class.
    std::map<std::string, std::pair<std::size_t, std::size_t>> inter_union;
    for (const auto& [cls, count] : f_t) {
      (void)count;
      std::size_t inter = 0, uni = 0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto it = data[i].masks.find(cls);
        const Tensor* mask = it == data[i].masks.end() ? nullptr : &it->second;
        for (std::size_t p = 0; p < bins[i].size(); ++p) {
          const bool b = bins[i][p] != 0;
          const bool m = mask != nullptr && mask->values()[p] > 0.0;
          inter += (b && m) ? 1 : 0;
          uni += (b || m) ? 1 : 0;
        }
      }
      inter_union[cls] = {inter, uni};
    }

    UnitDissection ud;
    ud.unit_index = u;
    ud.threshold = tk;
    ud.best_class = "none";
    for (const auto& [cls, iu] : inter_union) {
      const double iou =
          iu.second > 0
              ? static_cast<double>(iu.first) / static_cast<double>(iu.second)
              : 0.0;
      if (iou > ud.best_iou) {
        ud.best_iou = iou;
        if (iou >= iou_floor) ud.best_class = cls;
      }
    }

    if (ud.best_class != "none") {
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto it = data[i].masks.find(ud.best_class);
        if (it == data[i].masks.end()) continue;
        const auto& mask = it->second.values();
        bool intersects = false;
        for (std::size_t p = 0; p < bins[i].size() && !intersects; ++p)
          intersects = bins[i][p] != 0 && mask[p] > 0.0;
        if (intersects) f_d[ud.best_class] += 1;
      }
    }
    report.units.push_back(std::move(ud));
  }

  for (const auto& [cls, total] : f_t) {
    ClassFrequency cf;
    cf.class_name = cls;
    cf.detected = f_d.count(cls) ? f_d[cls] : 0;
    cf.total = total;
    cf.normalized =
        static_cast<double>(cf.detected) / static_cast<double>(cf.total);
    report.classes.push_back(std::move(cf));
  }
  return report;
}

DissectionReport dissect_units(const nn::Network& net,
                               const std::vector<LabeledSample>& data,
                               const std::vector<std::size_t>& units,
                               double iou_floor) {
  return dissect_units(feature_source(net), data, units, iou_floor);
}

double detector_performance_correlation(
    const std::vector<std::pair<double, double>>& per_model) {
  if (per_model.size() < 3)
    throw DomainError(
        "detector_performance_correlation: need at least 3 models");
  std::vector<double> xs, ys;
  xs.reserve(per_model.size());
  ys.reserve(per_model.size());
  for (const auto& [ratio, nss] : per_model) {
    xs.push_back(ratio);
    ys.push_back(nss);
  }
  return metrics::pearson(xs, ys);
}

}  // namespace gazelab::dissect
