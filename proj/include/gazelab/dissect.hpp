#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gazelab/network.hpp"
#include "gazelab/trainer.hpp"

namespace gazelab::dissect {

// Produces the M x N x K feature tensor a frozen model assigns to an image.
// Networks are wrapped via encoder_features; tests may plant arbitrary maps.
using FeatureSource = std::function<Tensor(const Tensor& image)>;

FeatureSource feature_source(const nn::Network& net);

struct UnitScore {
  std::size_t unit_index = 0;
  std::vector<std::pair<std::size_t, double>> per_image_nss;  // (image idx, nss)
  double top5_mean = 0.0;
  double normalized_score = 0.0;
};

struct LabeledSample {
  Tensor image;                          // h x w x 3
  std::map<std::string, Tensor> masks;   // class -> rank-2 {0,1} mask
};

struct UnitDissection {
  std::size_t unit_index = 0;
  double threshold = 0.0;        // T_k
  std::string best_class;        // "none" below the detection floor
  double best_iou = 0.0;
};

struct ClassFrequency {
  std::string class_name;
  std::size_t detected = 0;      // f_d: (unit, image) detection pairs
  std::size_t total = 0;         // f_t: images containing the class
  double normalized = 0.0;       // f_n = f_d / f_t
};

struct DissectionReport {
  std::vector<UnitDissection> units;
  std::vector<ClassFrequency> classes;
};

// Per-channel NSS scoring: each channel's activation map is bilinearly
// resized to the image extents and scored against that image's fixations;
// a unit's score is the mean of its 5 best per-image NSS values (all of
// them when fewer), min-max normalized across units. If every unit's mean
// is identical the normalization degenerates and all scores are 0.
std::vector<UnitScore> unit_nss_scores(const FeatureSource& features,
                                       const std::vector<GazeSample>& data);
std::vector<UnitScore> unit_nss_scores(const nn::Network& net,
                                       const std::vector<GazeSample>& data);

// Units whose normalized score reaches T, ascending by unit index.
std::vector<std::size_t> select_positive_detectors(
    const std::vector<UnitScore>& scores, double T = 0.9);

// Nearest-rank 99.5th percentile: the smallest value that at most 0.5% of
// the collection strictly exceeds.
double unit_threshold(std::vector<double> values);

// Network-dissection statistics for the chosen units. Per unit: T_k over
// its raw activations across the dataset, per-image binarization of the
// resized map by strict comparison, dataset-level IOU per class, and the
// best class subject to the detection floor. Classes absent from the whole
// dataset are excluded from the per-class table.
DissectionReport dissect_units(const FeatureSource& features,
                               const std::vector<LabeledSample>& data,
                               const std::vector<std::size_t>& units,
                               double iou_floor = 0.04);
DissectionReport dissect_units(const nn::Network& net,
                               const std::vector<LabeledSample>& data,
                               const std::vector<std::size_t>& units,
                               double iou_floor = 0.04);

// Pearson correlation between detector ratio and model NSS across models.
double detector_performance_correlation(
    const std::vector<std::pair<double, double>>& per_model);

// Extracts one channel of an M x N x K feature tensor as an M x N map.
Tensor channel_map(const Tensor& features, std::size_t unit);

}  // namespace gazelab::dissect
