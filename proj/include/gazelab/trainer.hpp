#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gazelab/loss.hpp"
#include "gazelab/metrics.hpp"
#include "gazelab/network.hpp"

namespace gazelab {

struct TrainConfig {
  loss::LossKind loss = loss::LossKind::EAD;
  double lr0 = 5e-5;
  double lr_decay = 0.1;
  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

// First/second moment accumulators mirror the parameter layout exactly.
struct AdamState {
  nn::NetworkGrads m;
  nn::NetworkGrads v;
  std::size_t t = 0;

  static AdamState for_network(const nn::Network& net);
};

struct GazeSample {
  Tensor image;              // h x w x 3 in [0,1]
  Tensor density;            // rank-2, max-normalized to [0,1]
  metrics::FixationSet fixations;
};

// One Adam update over a single kernel's weights and biases. Throws
// NumericError on non-finite gradients without touching params or state.
void adam_step(KernelSet& params, const KernelSet& grads, KernelSet& m,
               KernelSet& v, std::size_t t, double lr, double beta1,
               double beta2, double epsilon);

// Whole-network update; bumps state.t once, then updates every kernel with
// the shared step counter. Aborted (state untouched) on non-finite gradients.
void adam_step(nn::Network& net, const nn::NetworkGrads& grads,
               AdamState& state, double lr, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;     // 1-based in logs
  double lr = 0.0;
  double mean_loss = 0.0;    // mean per-pixel training loss
  double val_nss = 0.0;
  double val_cc = 0.0;
  double val_auc = 0.0;
  double val_sim = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  bool diverged = false;
};

// Deterministic 80/20 split: indices are shuffled with the given seed, and
// every fifth shuffled position goes to validation.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};
SplitIndices split_dataset(std::size_t count, std::uint64_t seed);

// Metric evaluation conventions for possibly-degenerate predictions:
// NSS/AUC use the raw map (their conventions already cover constants),
// CC of a constant prediction scores 0, and Sim min-max normalizes the
// prediction first (constant maps fall back to uniform).
struct EvalResult {
  double nss = 0.0;
  double cc = 0.0;
  double auc = 0.0;
  double sim = 0.0;
};
EvalResult evaluate_sample(const Tensor& prediction, const GazeSample& sample);
EvalResult evaluate_mean(const nn::Network& net,
                         const std::vector<GazeSample>& data,
                         const std::vector<std::size_t>& indices);

using EpochCallback = std::function<void(const EpochLog&, const nn::Network&)>;

// Trains in place. Epoch e (0-based) uses lr0 * lr_decay^e; per-sample
// gradients are averaged over each batch in fixed index order. Divergence
// (non-finite loss or gradient) stops training with the partial log.
TrainResult train(nn::Network& net, const std::vector<GazeSample>& data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace gazelab
