#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gazelab/dissect.hpp"
#include "gazelab/network.hpp"
#include "gazelab/synth.hpp"
#include "oracles.hpp"

using gazelab::GazeSample;
using gazelab::Rng;
using gazelab::Tensor;
namespace dissect = gazelab::dissect;
namespace nn = gazelab::nn;

namespace {

// Gaze data whose red channel is a planted density: channel 0 of the
// feature source is a perfect saliency unit, the others are constant.
std::vector<GazeSample> planted_gaze_data(std::size_t count, std::size_t h,
                                          std::size_t w, Rng& rng) {
  std::vector<GazeSample> data;
  for (std::size_t i = 0; i < count; ++i) {
    GazeSample s;
    s.image = Tensor(h, w, 3);
    Tensor density(h, w);
    const std::size_t cy = 2 + i % (h - 4);
    const std::size_t cx = 2 + (3 * i) % (w - 4);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = static_cast<double>(y) - static_cast<double>(cy);
        const double dx = static_cast<double>(x) - static_cast<double>(cx);
        density.at(y, x) = std::exp(-(dy * dy + dx * dx) / 6.0);
      }
    for (std::size_t p = 0; p < h * w; ++p) {
      s.image[p * 3 + 0] = density[p];
      s.image[p * 3 + 1] = 0.5;
      s.image[p * 3 + 2] = rng.uniform(0.0, 1.0);
    }
    s.density = density;
    Rng fix_rng(1000 + i);
    s.fixations = gazelab::sample_fixations(density, 18, fix_rng);
    data.push_back(std::move(s));
  }
  return data;
}

// Extracts each image channel as one feature unit, at image resolution.
dissect::FeatureSource channel_features(std::size_t units) {
  return [units](const Tensor& image) {
    Tensor f(image.dim(0), image.dim(1), units);
    for (std::size_t y = 0; y < image.dim(0); ++y)
      for (std::size_t x = 0; x < image.dim(1); ++x)
        for (std::size_t u = 0; u < units; ++u)
          f.at(y, x, u) = u < 3 ? image.at(y, x, u) : 0.25;
    return f;
  };
}

}  // namespace

TEST_CASE("unit_threshold nearest-rank percentile") {
  SUBCASE("one to one thousand") {
    std::vector<double> values(1000);
    std::iota(values.begin(), values.end(), 1.0);
    CHECK(dissect::unit_threshold(values) == 995.0);
  }
  SUBCASE("two hundred values") {
    std::vector<double> values(200);
    std::iota(values.begin(), values.end(), 1.0);
    CHECK(dissect::unit_threshold(values) == 199.0);
  }
  SUBCASE("small collections keep everything") {
    // Fewer than 200 values: nothing may strictly exceed the threshold.
    std::vector<double> values = {3.0, 1.0, 2.0};
    CHECK(dissect::unit_threshold(values) == 3.0);
  }
  SUBCASE("constant collection") {
    std::vector<double> values(500, 0.7);
    CHECK(dissect::unit_threshold(values) == 0.7);
  }
  SUBCASE("at most half a percent strictly exceeds") {
    Rng rng(3);
    std::vector<double> values(1234);
    for (double& v : values) v = rng.uniform(-5.0, 5.0);
    const double t = dissect::unit_threshold(values);
    std::size_t above = 0;
    for (double v : values)
      if (v > t) ++above;
    CHECK(static_cast<double>(above) <=
          0.005 * static_cast<double>(values.size()));
  }
  SUBCASE("empty collection") {
    CHECK_THROWS_AS(dissect::unit_threshold({}), gazelab::DomainError);
  }
}

TEST_CASE("detector selection thresholds the normalized scores") {
  std::vector<dissect::UnitScore> scores(3);
  scores[0].unit_index = 0;
  scores[0].normalized_score = 1.0;
  scores[1].unit_index = 1;
  scores[1].normalized_score = 0.95;
  scores[2].unit_index = 2;
  scores[2].normalized_score = 0.5;

  CHECK(dissect::select_positive_detectors(scores, 0.9) ==
        std::vector<std::size_t>{0, 1});
  CHECK(dissect::select_positive_detectors(scores, 0.0) ==
        std::vector<std::size_t>{0, 1, 2});
  CHECK(dissect::select_positive_detectors(scores, 1.1).empty());
}

TEST_CASE("a planted saliency unit earns the top normalized score") {
  Rng rng(9);
  const std::vector<GazeSample> data = planted_gaze_data(8, 16, 16, rng);
  const std::vector<dissect::UnitScore> scores =
      dissect::unit_nss_scores(channel_features(5), data);

  REQUIRE(scores.size() == 5);
  CHECK(scores[0].normalized_score == doctest::Approx(1.0));
  CHECK(scores[0].top5_mean > scores[1].top5_mean);
  // Constant channels carry no saliency signal.
  CHECK(scores[1].top5_mean == doctest::Approx(0.0));
  CHECK(scores[3].top5_mean == doctest::Approx(0.0));

  const std::vector<std::size_t> detectors =
      dissect::select_positive_detectors(scores, 0.9);
  REQUIRE(!detectors.empty());
  CHECK(detectors.front() == 0);

  // Top-5 mean over eight images: the average of the five best NSS values.
  std::vector<double> nss;
  for (const auto& [idx, v] : scores[0].per_image_nss) nss.push_back(v);
  std::sort(nss.begin(), nss.end(), std::greater<>());
  const double expect = (nss[0] + nss[1] + nss[2] + nss[3] + nss[4]) / 5.0;
  CHECK(scores[0].top5_mean == doctest::Approx(expect));
}

TEST_CASE("unit scoring is invariant to positive channel scaling") {
  Rng rng(11);
  const std::vector<GazeSample> data = planted_gaze_data(4, 12, 12, rng);

  auto scaled = [](const Tensor& image) {
    Tensor f(image.dim(0), image.dim(1), 3);
    for (std::size_t y = 0; y < image.dim(0); ++y)
      for (std::size_t x = 0; x < image.dim(1); ++x)
        for (std::size_t u = 0; u < 3; ++u)
          f.at(y, x, u) = 40.0 * image.at(y, x, u) + 3.0;
    return f;
  };
  const std::vector<dissect::UnitScore> base =
      dissect::unit_nss_scores(channel_features(3), data);
  const std::vector<dissect::UnitScore> warped =
      dissect::unit_nss_scores(scaled, data);
  REQUIRE(base.size() == warped.size());
  for (std::size_t u = 0; u < base.size(); ++u)
    CHECK(base[u].top5_mean ==
          doctest::Approx(warped[u].top5_mean).epsilon(1e-9));
}

TEST_CASE("all-constant features degenerate to zero scores") {
  Rng rng(13);
  const std::vector<GazeSample> data = planted_gaze_data(3, 12, 12, rng);
  auto flat = [](const Tensor& image) {
    Tensor f(image.dim(0), image.dim(1), 4);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5;
    return f;
  };
  const std::vector<dissect::UnitScore> scores =
      dissect::unit_nss_scores(flat, data);
  for (const auto& s : scores) {
    CHECK(s.top5_mean == 0.0);
    CHECK(s.normalized_score == 0.0);
  }
}

TEST_CASE("a single image makes the top-5 mean that image's score") {
  Rng rng(15);
  const std::vector<GazeSample> data = planted_gaze_data(1, 12, 12, rng);
  const std::vector<dissect::UnitScore> scores =
      dissect::unit_nss_scores(channel_features(3), data);
  REQUIRE(scores[0].per_image_nss.size() == 1);
  CHECK(scores[0].top5_mean ==
        doctest::Approx(scores[0].per_image_nss[0].second));
}

TEST_CASE("unit scoring validates its inputs") {
  Rng rng(17);
  const std::vector<GazeSample> data = planted_gaze_data(2, 12, 12, rng);

  CHECK_THROWS_AS(dissect::unit_nss_scores(channel_features(3), {}),
                  gazelab::ConfigError);

  auto rank2 = [](const Tensor& image) {
    return Tensor(image.dim(0), image.dim(1));
  };
  CHECK_THROWS_AS(dissect::unit_nss_scores(rank2, data), gazelab::ShapeError);

  std::size_t call = 0;
  auto inconsistent = [&call](const Tensor& image) mutable {
    return Tensor(image.dim(0), image.dim(1), ++call);
  };
  CHECK_THROWS_AS(dissect::unit_nss_scores(inconsistent, data),
                  gazelab::ShapeError);
}

TEST_CASE("feature_source wraps the encoder") {
  nn::NetworkConfig cfg;
  cfg.input_h = 16;
  cfg.input_w = 16;
  cfg.encoder_blocks = {{1, 4}, {1, 6}};
  cfg.pool_count = 2;
  cfg.seed = 2;
  nn::Network net = nn::build_network(cfg);

  Rng rng(19);
  const Tensor image = oracle::random_tensor({16, 16, 3}, rng, 0.0, 1.0);
  const Tensor direct = nn::encoder_features(net, image);
  const Tensor wrapped = dissect::feature_source(net)(image);
  REQUIRE(wrapped.same_dims(direct));
  for (std::size_t i = 0; i < wrapped.size(); ++i)
    CHECK(wrapped[i] == direct[i]);
}

TEST_CASE("dissection reproduces hand-computed IOU values") {
  // One 64x64 image; activations at image resolution so resizing is a
  // no-op. 4096 values per unit -> the top-0.5% cutoff keeps 20.
  const std::size_t hw = 64;
  dissect::LabeledSample sample;
  sample.image = Tensor(hw, hw, 3);

  Tensor act(hw, hw, 2);
  // Unit 0: four pixels at 10, twenty-one at 1, rest 0. The threshold
  // lands on 1, so exactly the four 10s survive.
  for (std::size_t i = 0; i < 4; ++i) act.at(0, i, 0) = 10.0;
  for (std::size_t i = 0; i < 21; ++i) act.at(1, i, 0) = 1.0;
  // Unit 1: fifteen pixels at 5, rest 0. The threshold lands on 0, so all
  // fifteen survive.
  for (std::size_t i = 0; i < 15; ++i) act.at(2, i, 1) = 5.0;

  // "square" overlaps two of unit 0's four surviving pixels (union 4).
  Tensor square(hw, hw);
  square.at(0, 0) = 1.0;
  square.at(0, 1) = 1.0;
  sample.masks["square"] = square;
  // "disk" is exactly unit 1's surviving set.
  Tensor disk(hw, hw);
  for (std::size_t i = 0; i < 15; ++i) disk.at(2, i) = 1.0;
  sample.masks["disk"] = disk;

  auto features = [act](const Tensor&) { return act; };
  const dissect::DissectionReport report =
      dissect::dissect_units(features, {sample}, {0, 1}, 0.04);

  REQUIRE(report.units.size() == 2);
  CHECK(report.units[0].unit_index == 0);
  CHECK(report.units[0].threshold == doctest::Approx(1.0));
  CHECK(report.units[0].best_class == "square");
  CHECK(report.units[0].best_iou == doctest::Approx(0.5));

  CHECK(report.units[1].unit_index == 1);
  CHECK(report.units[1].threshold == doctest::Approx(0.0));
  CHECK(report.units[1].best_class == "disk");
  CHECK(report.units[1].best_iou == doctest::Approx(1.0));
}

TEST_CASE("low-overlap units fall below the detection floor") {
  const std::size_t hw = 64;
  dissect::LabeledSample sample;
  sample.image = Tensor(hw, hw, 3);

  Tensor act(hw, hw, 1);
  for (std::size_t i = 0; i < 10; ++i) act.at(0, i, 0) = 1.0;
  Tensor mask(hw, hw);
  // One overlapping pixel out of ten: IOU = 1/19 < 0.06 floor.
  mask.at(0, 0) = 1.0;
  for (std::size_t i = 0; i < 9; ++i) mask.at(5, i) = 1.0;
  sample.masks["bar"] = mask;

  auto features = [act](const Tensor&) { return act; };
  const dissect::DissectionReport report =
      dissect::dissect_units(features, {sample}, {0}, 0.06);
  REQUIRE(report.units.size() == 1);
  CHECK(report.units[0].best_class == "none");
}

TEST_CASE("class frequencies count detecting images over class images") {
  // Ten images, all containing "disk". The unit's surviving pixels overlap
  // the disk mask in exactly three images, so f_n = 3/10.
  const std::size_t hw = 64;
  std::vector<dissect::LabeledSample> data(10);
  std::vector<Tensor> acts;
  for (std::size_t i = 0; i < 10; ++i) {
    data[i].image = Tensor(hw, hw, 3);
    data[i].image.at(0, 0, 0) = static_cast<double>(i);  // tag per image
    Tensor mask(hw, hw);
    for (std::size_t x = 0; x < 10; ++x) mask.at(1, x) = 1.0;
    data[i].masks["disk"] = mask;

    Tensor act(hw, hw, 1);
    if (i < 3) {
      for (std::size_t x = 0; x < 10; ++x) act.at(1, x, 0) = 1.0;  // on mask
    } else {
      for (std::size_t x = 0; x < 10; ++x) act.at(30, x, 0) = 1.0;  // off
    }
    acts.push_back(std::move(act));
  }
  auto features = [&data, &acts](const Tensor& image) {
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].image.at(0, 0, 0) == image.at(0, 0, 0)) return acts[i];
    throw gazelab::StateError("unknown image");
  };

  const dissect::DissectionReport report =
      dissect::dissect_units(features, data, {0}, 0.04);

  // Dataset-level IOU: 30 overlapping pixels over a union of
  // 3*10 + 7*(10+10) = 170.
  REQUIRE(report.units.size() == 1);
  CHECK(report.units[0].best_class == "disk");
  CHECK(report.units[0].best_iou == doctest::Approx(30.0 / 170.0));

  REQUIRE(report.classes.size() == 1);
  CHECK(report.classes[0].class_name == "disk");
  CHECK(report.classes[0].detected == 3);
  CHECK(report.classes[0].total == 10);
  CHECK(report.classes[0].normalized == doctest::Approx(0.3));
}

TEST_CASE("dissection validates units and masks") {
  dissect::LabeledSample sample;
  sample.image = Tensor(8, 8, 3);
  sample.masks["disk"] = Tensor(8, 8);
  sample.masks["disk"].at(0, 0) = 1.0;
  auto features = [](const Tensor& image) {
    return Tensor(image.dim(0), image.dim(1), 2);
  };
  CHECK_THROWS_AS(dissect::dissect_units(features, {sample}, {5}, 0.04),
                  gazelab::ShapeError);
  CHECK_THROWS_AS(
      dissect::dissect_units(features, {}, {0}, 0.04), gazelab::ConfigError);

  dissect::LabeledSample bad = sample;
  bad.masks["disk"] = Tensor(4, 4);
  CHECK_THROWS_AS(dissect::dissect_units(features, {bad}, {0}, 0.04),
                  gazelab::ShapeError);
}

TEST_CASE("channel_map slices one unit") {
  Tensor f(2, 2, 3);
  f.at(1, 0, 2) = 9.0;
  const Tensor m = dissect::channel_map(f, 2);
  REQUIRE(m.dims() == std::vector<std::size_t>{2, 2});
  CHECK(m.at(1, 0) == 9.0);
  CHECK_THROWS_AS(dissect::channel_map(f, 3), gazelab::ShapeError);
  CHECK_THROWS_AS(dissect::channel_map(Tensor(2, 2), 0), gazelab::ShapeError);
}

TEST_CASE("detector ratio correlates with model quality") {
  const std::vector<std::pair<double, double>> models = {
      {1.0, 1.68}, {2.7, 2.15}, {1.8, 1.92}, {4.1, 2.21}};
  const double r = dissect::detector_performance_correlation(models);
  CHECK(std::fabs(r - 0.94) <= 0.01);

  const std::vector<std::pair<double, double>> linear = {
      {1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}};
  CHECK(dissect::detector_performance_correlation(linear) ==
        doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(
      dissect::detector_performance_correlation({{1.0, 2.0}, {2.0, 1.0}}),
      gazelab::DomainError);
}

TEST_CASE("dissection pipeline is deterministic end to end") {
  gazelab::BlobSpec spec;
  spec.min_radius = 2;
  spec.max_radius = 3;
  spec.fixation_count = 15;
  const std::vector<gazelab::SynthSample> labeled =
      gazelab::synth_labeled_dataset(23, 6, 16, 16, spec);

  std::vector<GazeSample> gaze;
  std::vector<dissect::LabeledSample> masks;
  for (const auto& s : labeled) {
    gaze.push_back(s.gaze);
    masks.push_back({s.gaze.image, s.masks});
  }

  nn::NetworkConfig cfg;
  cfg.input_h = 16;
  cfg.input_w = 16;
  cfg.encoder_blocks = {{1, 4}, {1, 8}};
  cfg.pool_count = 2;
  cfg.seed = 4;
  nn::Network net = nn::build_network(cfg);

  const auto scores1 = dissect::unit_nss_scores(net, gaze);
  const auto scores2 = dissect::unit_nss_scores(net, gaze);
  REQUIRE(scores1.size() == scores2.size());
  for (std::size_t i = 0; i < scores1.size(); ++i) {
    CHECK(scores1[i].top5_mean == scores2[i].top5_mean);
    CHECK(scores1[i].normalized_score == scores2[i].normalized_score);
  }

  std::vector<std::size_t> all_units(8);
  std::iota(all_units.begin(), all_units.end(), std::size_t{0});
  const auto report1 = dissect::dissect_units(net, masks, all_units, 0.04);
  const auto report2 = dissect::dissect_units(net, masks, all_units, 0.04);
  REQUIRE(report1.units.size() == report2.units.size());
  for (std::size_t i = 0; i < report1.units.size(); ++i) {
    CHECK(report1.units[i].threshold == report2.units[i].threshold);
    CHECK(report1.units[i].best_class == report2.units[i].best_class);
    CHECK(report1.units[i].best_iou == report2.units[i].best_iou);
  }
}
