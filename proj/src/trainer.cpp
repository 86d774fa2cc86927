#include "gazelab/trainer.hpp"

#include <cmath>
#include <numeric>

#include "gazelab/error.hpp"
#include "gazelab/rng.hpp"

namespace gazelab {

void TrainConfig::validate() const {
  if (!(lr0 >= 0.0)) throw ConfigError("train: lr0 must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw ConfigError("train: lr_decay must be in (0, 1]");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("train: betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
}

AdamState AdamState::for_network(const nn::Network& net) {
  AdamState s;
  s.m = nn::NetworkGrads::zeros_like(net);
  s.v = nn::NetworkGrads::zeros_like(net);
  s.t = 0;
  return s;
}

namespace {

bool kernel_finite(const KernelSet& g) {
  for (double x : g.weights.values())
    if (!std::isfinite(x)) return false;
  for (double x : g.bias)
    if (!std::isfinite(x)) return false;
  return true;
}

void adam_update_values(double* p, const double* g, double* m, double* v,
                        std::size_t n, std::size_t t, double lr, double b1,
                        double b2, double eps) {
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void adam_update_kernel(KernelSet& p, const KernelSet& g, KernelSet& m,
                        KernelSet& v, std::size_t t, double lr, double b1,
                        double b2, double eps) {
  adam_update_values(p.weights.values().data(), g.weights.values().data(),
                     m.weights.values().data(), v.weights.values().data(),
                     p.weights.size(), t, lr, b1, b2, eps);
  adam_update_values(p.bias.data(), g.bias.data(), m.bias.data(),
                     v.bias.data(), p.bias.size(), t, lr, b1, b2, eps);
}

}  // namespace

void adam_step(KernelSet& params, const KernelSet& grads, KernelSet& m,
               KernelSet& v, std::size_t t, double lr, double beta1,
               double beta2, double epsilon) {
  if (params.weights.dims() != grads.weights.dims() ||
      params.bias.size() != grads.bias.size())
    throw ShapeError("adam: gradient extents do not match parameters");
  if (!kernel_finite(grads))
    throw NumericError("adam: non-finite gradient, step aborted");
  if (t < 1) throw StateError("adam: step counter must be >= 1");
  adam_update_kernel(params, grads, m, v, t, lr, beta1, beta2, epsilon);
}

void adam_step(nn::Network& net, const nn::NetworkGrads& grads,
               AdamState& state, double lr, const TrainConfig& cfg) {
  bool finite = true;
  grads.visit([&finite](const std::string&, const KernelSet& g) {
    if (!kernel_finite(g)) finite = false;
  });
  if (!finite)
    throw NumericError("adam: non-finite gradient, step aborted");

  state.t += 1;
  for (std::size_t b = 0; b < net.encoder.size(); ++b)
    for (std::size_t c = 0; c < net.encoder[b].size(); ++c)
      adam_update_kernel(net.encoder[b][c], grads.encoder[b][c],
                         state.m.encoder[b][c], state.v.encoder[b][c], state.t,
                         lr, cfg.beta1, cfg.beta2, cfg.epsilon);
  for (std::size_t b = 0; b < net.decoder.size(); ++b) {
    adam_update_kernel(net.decoder[b].reduce, grads.decoder[b].reduce,
                       state.m.decoder[b].reduce, state.v.decoder[b].reduce,
                       state.t, lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    adam_update_kernel(net.decoder[b].refine, grads.decoder[b].refine,
                       state.m.decoder[b].refine, state.v.decoder[b].refine,
                       state.t, lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    adam_update_kernel(net.decoder[b].up, grads.decoder[b].up,
                       state.m.decoder[b].up, state.v.decoder[b].up, state.t,
                       lr, cfg.beta1, cfg.beta2, cfg.epsilon);
  }
  adam_update_kernel(net.head, grads.head, state.m.head, state.v.head,
                     state.t, lr, cfg.beta1, cfg.beta2, cfg.epsilon);
}

SplitIndices split_dataset(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Rng::derive_seed(seed, 0x73706c6974));  // "split"
  for (std::size_t i = count; i-- > 1;) {
    const std::size_t j = rng.uniform_int(0, i);
    std::swap(order[i], order[j]);
  }
  SplitIndices split;
  for (std::size_t p = 0; p < count; ++p) {
    if (p % 5 == 4)
      split.val.push_back(order[p]);
    else
      split.train.push_back(order[p]);
  }
  return split;
}

EvalResult evaluate_sample(const Tensor& prediction,
                           const GazeSample& sample) {
  EvalResult r;
  r.nss = metrics::nss(prediction, sample.fixations);
  r.auc = metrics::auc_judd(prediction, sample.fixations);

  const double lo = prediction.min_value();
  const double hi = prediction.max_value();
  const bool pred_constant = !(hi > lo);

  if (pred_constant || !(sample.density.max_value() > sample.density.min_value())) {
    r.cc = 0.0;
  } else {
    r.cc = metrics::cc(prediction, sample.density);
  }

  Tensor norm = prediction;
  if (pred_constant) {
    for (double& x : norm.values()) x = 1.0;
  } else {
    for (double& x : norm.values()) x = (x - lo) / (hi - lo);
  }
  r.sim = metrics::sim(norm, sample.density);
  return r;
}

EvalResult evaluate_mean(const nn::Network& net,
                         const std::vector<GazeSample>& data,
                         const std::vector<std::size_t>& indices) {
  EvalResult mean;
  if (indices.empty()) return mean;
  for (std::size_t i : indices) {
    const EvalResult r = evaluate_sample(nn::predict(net, data[i].image),
                                         data[i]);
    mean.nss += r.nss;
    mean.cc += r.cc;
    mean.auc += r.auc;
    mean.sim += r.sim;
  }
  const double n = static_cast<double>(indices.size());
  mean.nss /= n;
  mean.cc /= n;
  mean.auc /= n;
  mean.sim /= n;
  return mean;
}

TrainResult train(nn::Network& net, const std::vector<GazeSample>& data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.empty()) throw ConfigError("train: dataset is empty");

  const SplitIndices split = split_dataset(data.size(), cfg.seed);
  AdamState state = AdamState::for_network(net);
  const loss::LossSpec spec{cfg.loss, loss::Reduction::Mean};

  TrainResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const double lr = cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(e));
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < split.train.size();
           start += cfg.batch_size) {
        const std::size_t end =
            std::min(start + cfg.batch_size, split.train.size());
        nn::NetworkGrads batch = nn::NetworkGrads::zeros_like(net);
        const double inv = 1.0 / static_cast<double>(end - start);
        for (std::size_t p = start; p < end; ++p) {
          const GazeSample& s = data[split.train[p]];
          auto [pred, cache] = nn::forward(net, s.image);
          loss_sum += loss::loss_value(spec, pred, s.density);
          const Tensor grad = loss::loss_grad(spec, pred, s.density);
          batch.accumulate_scaled(nn::backward(net, cache, grad), inv);
        }
        adam_step(net, batch, state, lr, cfg);
      }
    } catch (const NumericError&) {
      result.diverged = true;
      break;
    }

    EpochLog log;
    log.epoch = e + 1;
    log.lr = lr;
    log.mean_loss = split.train.empty()
                        ? 0.0
                        : loss_sum / static_cast<double>(split.train.size());
    const EvalResult val = evaluate_mean(net, data, split.val);
    log.val_nss = val.nss;
    log.val_cc = val.cc;
    log.val_auc = val.auc;
    log.val_sim = val.sim;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log, net);
  }
  return result;
}

}  // namespace gazelab
