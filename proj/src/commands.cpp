#include "gazelab/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "gazelab/dissect.hpp"
#include "gazelab/error.hpp"
#include "gazelab/synth.hpp"
#include "gazelab/trainer.hpp"

namespace fs = std::filesystem;

namespace gazelab::cmd {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt(std::size_t v) { return std::to_string(v); }

void require_known_keys(const io::Config& cfg,
                        std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : cfg) {
    (void)value;
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("config: unknown key '" + key + "'");
  }
}

nn::NetworkConfig network_from_config(const io::Config& cfg,
                                      std::size_t fallback_h,
                                      std::size_t fallback_w,
                                      std::uint64_t seed) {
  io::Config ini;
  ini["input_h"] = fmt(io::config_u64(cfg, "input_h", fallback_h));
  ini["input_w"] = fmt(io::config_u64(cfg, "input_w", fallback_w));
  ini["encoder"] = io::config_str(cfg, "encoder", "2x8,2x16");
  ini["pool_count"] = fmt(io::config_u64(cfg, "pool_count", 2));
  ini["decoder_plan"] = io::config_str(cfg, "decoder_plan", "");
  ini["net_seed"] = std::to_string(seed);
  return io::network_config_from_ini(ini);
}

std::vector<GazeSample> gaze_samples(io::DatasetBundle&& bundle) {
  std::vector<GazeSample> out;
  out.reserve(bundle.samples.size());
  for (auto& s : bundle.samples) out.push_back(std::move(s.gaze));
  return out;
}

TrainConfig train_config(const io::Config& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.loss = loss::loss_kind_from_name(io::config_str(cfg, "loss", "ead"));
  tc.lr0 = io::config_f64(cfg, "lr0", 5e-5);
  tc.lr_decay = io::config_f64(cfg, "lr_decay", 0.1);
  tc.epochs = io::config_u64(cfg, "epochs", 5);
  tc.batch_size = io::config_u64(cfg, "batch_size", 8);
  tc.beta1 = io::config_f64(cfg, "beta1", 0.9);
  tc.beta2 = io::config_f64(cfg, "beta2", 0.999);
  tc.epsilon = io::config_f64(cfg, "epsilon", 1e-8);
  tc.seed = seed;
  tc.validate();
  return tc;
}

void write_effective_config(const fs::path& out_dir, const io::Config& echo) {
  io::write_config(out_dir / "config.txt", echo);
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "checkpoint_epoch_%04zu.bin", epoch);
  return buf;
}

}  // namespace

void train(const io::Config& cfg, const fs::path& out_dir) {
  require_known_keys(cfg, {"seed", "dataset_dir", "loss", "lr0", "lr_decay",
                           "epochs", "batch_size", "beta1", "beta2", "epsilon",
                           "input_h", "input_w", "encoder", "pool_count",
                           "decoder_plan"});
  const std::uint64_t seed = io::config_u64(cfg, "seed", 1);
  const std::string dataset_dir = io::config_str(cfg, "dataset_dir");
  std::vector<GazeSample> data =
      gaze_samples(io::load_dataset(dataset_dir));
  if (data.empty()) throw ConfigError("train: dataset is empty");

  const nn::NetworkConfig net_cfg = network_from_config(
      cfg, data.front().image.dim(0), data.front().image.dim(1), seed);
  const TrainConfig tc = train_config(cfg, seed);

  io::Config echo = io::network_config_to_ini(net_cfg);
  echo["command"] = "train";
  echo["seed"] = std::to_string(seed);
  echo["dataset_dir"] = dataset_dir;
  echo["loss"] = loss::loss_kind_name(tc.loss);
  echo["lr0"] = fmt(tc.lr0);
  echo["lr_decay"] = fmt(tc.lr_decay);
  echo["epochs"] = fmt(tc.epochs);
  echo["batch_size"] = fmt(tc.batch_size);
  echo["beta1"] = fmt(tc.beta1);
  echo["beta2"] = fmt(tc.beta2);
  echo["epsilon"] = fmt(tc.epsilon);
  fs::create_directories(out_dir);
  write_effective_config(out_dir, echo);

  nn::Network net = nn::build_network(net_cfg);
  std::vector<std::vector<std::string>> log_rows;
  log_rows.push_back(
      {"epoch", "mean_loss", "val_nss", "val_cc", "val_auc", "val_sim"});

  const TrainResult result = gazelab::train(
      net, data, tc, [&](const EpochLog& log, const nn::Network& snapshot) {
        log_rows.push_back({fmt(log.epoch), fmt(log.mean_loss),
                            fmt(log.val_nss), fmt(log.val_cc),
                            fmt(log.val_auc), fmt(log.val_sim)});
        io::save_checkpoint(out_dir / checkpoint_name(log.epoch), snapshot,
                            log.epoch);
      });

  io::write_csv(out_dir / "train_log.csv", log_rows);
  io::save_checkpoint(out_dir / "checkpoint_final.bin", net,
                      result.log.empty() ? 0 : result.log.back().epoch);
  if (result.diverged)
    throw NumericError("train: loss diverged; partial log written to " +
                       (out_dir / "train_log.csv").string());
}

void eval(const io::Config& cfg, const fs::path& checkpoint,
          const fs::path& out_dir) {
  require_known_keys(cfg, {"seed", "dataset_dir"});
  const std::string dataset_dir = io::config_str(cfg, "dataset_dir");
  io::DatasetBundle bundle = io::load_dataset(dataset_dir);
  if (bundle.samples.empty()) throw ConfigError("eval: dataset is empty");
  io::LoadedCheckpoint loaded = io::load_checkpoint(checkpoint);

  io::Config echo;
  echo["command"] = "eval";
  echo["dataset_dir"] = dataset_dir;
  echo["checkpoint"] = checkpoint.string();
  fs::create_directories(out_dir);
  write_effective_config(out_dir, echo);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"image_id", "nss", "cc", "auc", "sim"});
  EvalResult mean;
  for (std::size_t i = 0; i < bundle.samples.size(); ++i) {
    const GazeSample& s = bundle.samples[i].gaze;
    const EvalResult r =
        evaluate_sample(nn::predict(loaded.net, s.image), s);
    rows.push_back(
        {bundle.ids[i], fmt(r.nss), fmt(r.cc), fmt(r.auc), fmt(r.sim)});
    mean.nss += r.nss;
    mean.cc += r.cc;
    mean.auc += r.auc;
    mean.sim += r.sim;
  }
  const double n = static_cast<double>(bundle.samples.size());
  rows.push_back({"mean", fmt(mean.nss / n), fmt(mean.cc / n),
                  fmt(mean.auc / n), fmt(mean.sim / n)});
  io::write_csv(out_dir / "eval.csv", rows);
}

namespace {

// Crop the grayscale image to the active region of the unit's resized,
// min-max-normalized activation and dim the inactive remainder.
Tensor montage_tile(const Tensor& image, const Tensor& activation) {
  const std::size_t h = image.dim(0), w = image.dim(1);
  Tensor act = activation;
  const double lo = act.min_value(), hi = act.max_value();
  if (hi > lo)
    for (double& v : act.values()) v = (v - lo) / (hi - lo);
  else
    for (double& v : act.values()) v = 0.0;

  std::size_t y0 = h, y1 = 0, x0 = w, x1 = 0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      if (act.at(y, x) > 0.5) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
  if (y0 > y1) {  // nothing active: keep the whole frame
    y0 = 0;
    y1 = h - 1;
    x0 = 0;
    x1 = w - 1;
  }

  Tensor tile(y1 - y0 + 1, x1 - x0 + 1);
  for (std::size_t y = y0; y <= y1; ++y)
    for (std::size_t x = x0; x <= x1; ++x) {
      const double gray =
          (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2)) / 3.0;
      tile.at(y - y0, x - x0) = gray * (0.25 + 0.75 * act.at(y, x));
    }
  return tile;
}

}  // namespace

void dissect(const io::Config& cfg, const fs::path& checkpoint,
             const fs::path& out_dir) {
  require_known_keys(cfg, {"seed", "dataset_dir", "labeled_dir",
                           "detector_threshold", "iou_floor"});
  const std::string dataset_dir = io::config_str(cfg, "dataset_dir");
  const std::string labeled_dir =
      io::config_str(cfg, "labeled_dir", dataset_dir);
  const double threshold = io::config_f64(cfg, "detector_threshold", 0.9);
  const double iou_floor = io::config_f64(cfg, "iou_floor", 0.04);

  io::DatasetBundle gaze_bundle = io::load_dataset(dataset_dir);
  if (gaze_bundle.samples.empty())
    throw ConfigError("dissect: dataset is empty");
  io::DatasetBundle labeled_bundle =
      labeled_dir == dataset_dir ? io::load_dataset(dataset_dir)
                                 : io::load_dataset(labeled_dir);
  io::LoadedCheckpoint loaded = io::load_checkpoint(checkpoint);

  io::Config echo;
  echo["command"] = "dissect";
  echo["dataset_dir"] = dataset_dir;
  echo["labeled_dir"] = labeled_dir;
  echo["checkpoint"] = checkpoint.string();
  echo["detector_threshold"] = fmt(threshold);
  echo["iou_floor"] = fmt(iou_floor);
  fs::create_directories(out_dir);
  write_effective_config(out_dir, echo);

  std::vector<std::string> gaze_ids = gaze_bundle.ids;
  std::vector<GazeSample> gaze = gaze_samples(std::move(gaze_bundle));
  const auto scores = dissect::unit_nss_scores(loaded.net, gaze);
  const auto detectors = dissect::select_positive_detectors(scores, threshold);

  std::vector<std::vector<std::string>> score_rows;
  score_rows.push_back({"unit", "top5_mean", "normalized", "is_detector"});
  for (const auto& s : scores) {
    const bool is_det = std::binary_search(detectors.begin(), detectors.end(),
                                           s.unit_index);
    score_rows.push_back({fmt(s.unit_index), fmt(s.top5_mean),
                          fmt(s.normalized_score), is_det ? "1" : "0"});
  }
  io::write_csv(out_dir / "unit_scores.csv", score_rows);

  std::vector<dissect::LabeledSample> labeled;
  labeled.reserve(labeled_bundle.samples.size());
  for (auto& s : labeled_bundle.samples)
    labeled.push_back({std::move(s.gaze.image), std::move(s.masks)});

  const dissect::DissectionReport report = dissect::dissect_units(
      loaded.net, labeled, detectors, iou_floor);

  std::vector<std::vector<std::string>> unit_rows;
  unit_rows.push_back({"unit", "threshold", "best_class", "iou"});
  for (const auto& u : report.units)
    unit_rows.push_back(
        {fmt(u.unit_index), fmt(u.threshold), u.best_class, fmt(u.best_iou)});
  io::write_csv(out_dir / "dissection.csv", unit_rows);

  std::vector<std::vector<std::string>> class_rows;
  class_rows.push_back({"class", "f_d", "f_t", "f_n"});
  for (const auto& c : report.classes)
    class_rows.push_back(
        {c.class_name, fmt(c.detected), fmt(c.total), fmt(c.normalized)});
  io::write_csv(out_dir / "classes.csv", class_rows);

  // Montages: for each detector, the 5 top-NSS images cropped to the
  // unit's active region.
  const fs::path montage_dir = out_dir / "montages";
  fs::create_directories(montage_dir);
  for (const auto& s : scores) {
    if (!std::binary_search(detectors.begin(), detectors.end(), s.unit_index))
      continue;
    auto ranked = s.per_image_nss;
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t take = std::min<std::size_t>(5, ranked.size());
    for (std::size_t r = 0; r < take; ++r) {
      const std::size_t img_idx = ranked[r].first;
      const Tensor feats =
          nn::encoder_features(loaded.net, gaze[img_idx].image);
      const Tensor act = ops::bilinear_resize(
          dissect::channel_map(feats, s.unit_index),
          gaze[img_idx].image.dim(0), gaze[img_idx].image.dim(1));
      char name[96];
      std::snprintf(name, sizeof(name), "unit_%04zu_rank%zu_%s.pgm",
                    s.unit_index, r + 1, gaze_ids[img_idx].c_str());
      io::write_pgm(montage_dir / name,
                    montage_tile(gaze[img_idx].image, act));
    }
  }
}

void synth(const io::Config& cfg, const fs::path& out_dir) {
  require_known_keys(cfg, {"seed", "count", "height", "width", "min_radius",
                           "max_radius", "sigma_scale", "min_blobs",
                           "max_blobs", "fixations"});
  const std::uint64_t seed = io::config_u64(cfg, "seed", 1);
  const std::size_t count = io::config_u64(cfg, "count", 20);
  const std::size_t h = io::config_u64(cfg, "height", 64);
  const std::size_t w = io::config_u64(cfg, "width", 64);
  BlobSpec spec;
  spec.min_radius = io::config_u64(cfg, "min_radius", spec.min_radius);
  spec.max_radius = io::config_u64(cfg, "max_radius", spec.max_radius);
  spec.sigma_scale = io::config_f64(cfg, "sigma_scale", spec.sigma_scale);
  spec.min_blobs = io::config_u64(cfg, "min_blobs", spec.min_blobs);
  spec.max_blobs = io::config_u64(cfg, "max_blobs", spec.max_blobs);
  spec.fixation_count =
      io::config_u64(cfg, "fixations", spec.fixation_count);

  const std::vector<SynthSample> samples =
      synth_labeled_dataset(seed, count, h, w, spec);
  io::save_dataset(out_dir, samples);

  io::Config echo;
  echo["command"] = "synth";
  echo["seed"] = std::to_string(seed);
  echo["count"] = fmt(count);
  echo["height"] = fmt(h);
  echo["width"] = fmt(w);
  echo["min_radius"] = fmt(spec.min_radius);
  echo["max_radius"] = fmt(spec.max_radius);
  echo["sigma_scale"] = fmt(spec.sigma_scale);
  echo["min_blobs"] = fmt(spec.min_blobs);
  echo["max_blobs"] = fmt(spec.max_blobs);
  echo["fixations"] = fmt(spec.fixation_count);
  write_effective_config(out_dir, echo);
}

int dispatch(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return 0;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gazelab::cmd
