#include "gazelab/network.hpp"

#include <cmath>

#include "gazelab/rng.hpp"

namespace gazelab::nn {

namespace {

void init_kernel(KernelSet& k, Rng& rng) {
  const double fan_in =
      static_cast<double>(k.kh() * k.kw() * k.in_channels());
  const double stddev = std::sqrt(2.0 / fan_in);
  for (double& w : k.weights.values()) w = rng.normal(0.0, stddev);
  // biases stay zero
}

}  // namespace

void NetworkConfig::validate() const {
  if (encoder_blocks.empty())
    throw ConfigError("network: at least one encoder block required");
  if (pool_count < 1 || pool_count > encoder_blocks.size())
    throw ConfigError("network: pool_count must be in [1, #encoder blocks]");
  const std::size_t div = std::size_t{1} << pool_count;
  if (input_h % div != 0 || input_w % div != 0)
    throw ConfigError("network: input extents must be divisible by 2^pool_count");
  for (const auto& b : encoder_blocks)
    if (b.conv_count < 1 || b.out_channels < 1)
      throw ConfigError("network: encoder block needs >= 1 conv and channel");
  if (!decoder_channel_plan.empty()) {
    if (decoder_channel_plan.size() != pool_count)
      throw ConfigError(
          "network: decoder plan length must equal pool_count (one block "
          "recovers each pooled resolution)");
    for (std::size_t c : decoder_channel_plan)
      if (c < 1) throw ConfigError("network: decoder channels must be >= 1");
  }
}

std::size_t NetworkConfig::encoder_out_channels() const {
  return encoder_blocks.back().out_channels;
}

std::vector<std::size_t> NetworkConfig::effective_decoder_plan() const {
  if (!decoder_channel_plan.empty()) return decoder_channel_plan;
  std::vector<std::size_t> plan;
  const std::size_t k = encoder_out_channels();
  const std::size_t floor_c = k > 64 ? 64 : 1;
  std::size_t cur = k;
  for (std::size_t i = 0; i < pool_count; ++i) {
    cur = std::max(cur / 2, floor_c);
    plan.push_back(cur);
  }
  return plan;
}

void Network::visit_params(
    const std::function<void(const std::string&, KernelSet&)>& fn) {
  for (std::size_t b = 0; b < encoder.size(); ++b)
    for (std::size_t c = 0; c < encoder[b].size(); ++c)
      fn("enc" + std::to_string(b + 1) + ".conv" + std::to_string(c + 1),
         encoder[b][c]);
  for (std::size_t b = 0; b < decoder.size(); ++b) {
    const std::string p = "dec" + std::to_string(b + 1);
    fn(p + ".reduce", decoder[b].reduce);
    fn(p + ".refine", decoder[b].refine);
    fn(p + ".up", decoder[b].up);
  }
  fn("head", head);
}

void Network::visit_params(
    const std::function<void(const std::string&, const KernelSet&)>& fn)
    const {
  auto& self = const_cast<Network&>(*this);
  self.visit_params(
      [&fn](const std::string& name, KernelSet& k) { fn(name, k); });
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  visit_params([&n](const std::string&, const KernelSet& k) {
    n += k.param_count();
  });
  return n;
}

NetworkGrads NetworkGrads::zeros_like(const Network& net) {
  NetworkGrads g;
  g.encoder.resize(net.encoder.size());
  for (std::size_t b = 0; b < net.encoder.size(); ++b)
    for (const auto& k : net.encoder[b])
      g.encoder[b].emplace_back(k.kh(), k.kw(), k.in_channels(),
                                k.out_channels());
  for (const auto& d : net.decoder) {
    DecoderBlock db;
    db.reduce = KernelSet(d.reduce.kh(), d.reduce.kw(), d.reduce.in_channels(),
                          d.reduce.out_channels());
    db.refine = KernelSet(d.refine.kh(), d.refine.kw(), d.refine.in_channels(),
                          d.refine.out_channels());
    db.up = KernelSet(d.up.kh(), d.up.kw(), d.up.in_channels(),
                      d.up.out_channels());
    g.decoder.push_back(std::move(db));
  }
  g.head = KernelSet(net.head.kh(), net.head.kw(), net.head.in_channels(),
                     net.head.out_channels());
  return g;
}

namespace {

void axpy_kernel(KernelSet& dst, const KernelSet& src, double scale) {
  for (std::size_t i = 0; i < dst.weights.size(); ++i)
    dst.weights[i] += scale * src.weights[i];
  for (std::size_t i = 0; i < dst.bias.size(); ++i)
    dst.bias[i] += scale * src.bias[i];
}

}  // namespace

void NetworkGrads::accumulate_scaled(const NetworkGrads& other, double scale) {
  for (std::size_t b = 0; b < encoder.size(); ++b)
    for (std::size_t c = 0; c < encoder[b].size(); ++c)
      axpy_kernel(encoder[b][c], other.encoder[b][c], scale);
  for (std::size_t b = 0; b < decoder.size(); ++b) {
    axpy_kernel(decoder[b].reduce, other.decoder[b].reduce, scale);
    axpy_kernel(decoder[b].refine, other.decoder[b].refine, scale);
    axpy_kernel(decoder[b].up, other.decoder[b].up, scale);
  }
  axpy_kernel(head, other.head, scale);
}

void NetworkGrads::visit(
    const std::function<void(const std::string&, KernelSet&)>& fn) {
  for (std::size_t b = 0; b < encoder.size(); ++b)
    for (std::size_t c = 0; c < encoder[b].size(); ++c)
      fn("enc" + std::to_string(b + 1) + ".conv" + std::to_string(c + 1),
         encoder[b][c]);
  for (std::size_t b = 0; b < decoder.size(); ++b) {
    const std::string p = "dec" + std::to_string(b + 1);
    fn(p + ".reduce", decoder[b].reduce);
    fn(p + ".refine", decoder[b].refine);
    fn(p + ".up", decoder[b].up);
  }
  fn("head", head);
}

void NetworkGrads::visit(
    const std::function<void(const std::string&, const KernelSet&)>& fn)
    const {
  auto& self = const_cast<NetworkGrads&>(*this);
  self.visit([&fn](const std::string& name, KernelSet& k) { fn(name, k); });
}

Network build_network(const NetworkConfig& config) {
  config.validate();
  Network net;
  net.config = config;
  Rng rng(Rng::derive_seed(config.seed, 0x6e6574));  // "net"

  std::size_t in_ch = 3;
  for (const auto& spec : config.encoder_blocks) {
    std::vector<KernelSet> convs;
    for (std::size_t c = 0; c < spec.conv_count; ++c) {
      KernelSet k(3, 3, in_ch, spec.out_channels);
      init_kernel(k, rng);
      convs.push_back(std::move(k));
      in_ch = spec.out_channels;
    }
    net.encoder.push_back(std::move(convs));
  }

  const auto plan = config.effective_decoder_plan();
  std::size_t cur = config.encoder_out_channels();
  for (std::size_t b = 0; b < plan.size(); ++b) {
    DecoderBlock blk;
    blk.reduce = KernelSet(3, 3, cur, plan[b]);
    blk.refine = KernelSet(3, 3, plan[b], plan[b]);
    blk.up = KernelSet(2, 2, plan[b], plan[b]);
    init_kernel(blk.reduce, rng);
    init_kernel(blk.refine, rng);
    init_kernel(blk.up, rng);
    net.decoder.push_back(std::move(blk));
    cur = plan[b];
  }

  net.head = KernelSet(3, 3, cur, 1);
  init_kernel(net.head, rng);
  return net;
}

std::pair<Tensor, ActivationCache> forward(const Network& net,
                                           const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != net.config.input_h ||
      image.dim(1) != net.config.input_w || image.dim(2) != 3)
    throw ShapeError("forward: image extents do not match network config");

  ActivationCache cache;
  cache.input = image;
  // cur points at tensors owned by the cache; reserve so growth never
  // relocates them.
  cache.enc.reserve(net.encoder.size());
  cache.dec.reserve(net.decoder.size());
  const Tensor* cur = &cache.input;

  for (std::size_t b = 0; b < net.encoder.size(); ++b) {
    ActivationCache::EncBlock blk;
    blk.conv_out.reserve(net.encoder[b].size());
    for (const auto& k : net.encoder[b]) {
      blk.conv_out.push_back(ops::relu(ops::conv2d(*cur, k)));
      cur = &blk.conv_out.back();
    }
    if (b < net.config.pool_count) {
      blk.pool = ops::maxpool2d(*cur);
      blk.pooled = true;
      blk.pooled_out = blk.pool.output;
      cache.enc.push_back(std::move(blk));
      cur = &cache.enc.back().pooled_out;
    } else {
      cache.enc.push_back(std::move(blk));
      cur = &cache.enc.back().conv_out.back();
    }
  }
  cache.encoder_output = *cur;

  for (const auto& blk : net.decoder) {
    ActivationCache::DecBlock dc;
    dc.f1 = ops::relu(ops::conv2d(*cur, blk.reduce));
    dc.f2 = ops::relu(ops::conv2d(dc.f1, blk.refine));
    dc.summed = ops::add(dc.f1, dc.f2);
    dc.out = ops::relu(ops::deconv2d(dc.summed, blk.up));
    cache.dec.push_back(std::move(dc));
    cur = &cache.dec.back().out;
  }

  Tensor raw = ops::conv2d(*cur, net.head);  // h x w x 1, no squashing
  Tensor saliency(std::vector<std::size_t>{raw.dim(0), raw.dim(1)},
                  raw.values());
  return {std::move(saliency), std::move(cache)};
}

Tensor predict(const Network& net, const Tensor& image) {
  return forward(net, image).first;
}

NetworkGrads backward(const Network& net, const ActivationCache& cache,
                      const Tensor& grad_saliency) {
  if (cache.enc.size() != net.encoder.size() ||
      cache.dec.size() != net.decoder.size())
    throw StateError("backward: cache does not match network layout");
  if (grad_saliency.rank() != 2 ||
      grad_saliency.dim(0) != net.config.input_h ||
      grad_saliency.dim(1) != net.config.input_w)
    throw ShapeError("backward: grad extents do not match saliency map");

  NetworkGrads grads = NetworkGrads::zeros_like(net);

  // Head: saliency was a squeezed h x w x 1 conv output.
  Tensor grad_head_out(
      std::vector<std::size_t>{grad_saliency.dim(0), grad_saliency.dim(1), 1},
      grad_saliency.values());
  const Tensor& head_in =
      net.decoder.empty() ? cache.encoder_output : cache.dec.back().out;
  ops::ConvGrads hg = ops::conv2d_backward(head_in, net.head, grad_head_out);
  grads.head = std::move(hg.kernels);
  Tensor grad = std::move(hg.input);

  for (std::size_t b = net.decoder.size(); b-- > 0;) {
    const auto& blk = net.decoder[b];
    const auto& dc = cache.dec[b];
    const Tensor& block_in =
        b == 0 ? cache.encoder_output : cache.dec[b - 1].out;

    grad = ops::relu_backward(dc.out, grad);
    ops::ConvGrads ug = ops::deconv2d_backward(dc.summed, blk.up, grad);
    grads.decoder[b].up = std::move(ug.kernels);

    // The sum fans grad out to both branches; refine feeds back into f1.
    Tensor grad_f2 = ops::relu_backward(dc.f2, ug.input);
    ops::ConvGrads rg = ops::conv2d_backward(dc.f1, blk.refine, grad_f2);
    grads.decoder[b].refine = std::move(rg.kernels);
    Tensor grad_f1 = ops::add(ug.input, rg.input);

    grad_f1 = ops::relu_backward(dc.f1, grad_f1);
    ops::ConvGrads dg = ops::conv2d_backward(block_in, blk.reduce, grad_f1);
    grads.decoder[b].reduce = std::move(dg.kernels);
    grad = std::move(dg.input);
  }

  for (std::size_t b = net.encoder.size(); b-- > 0;) {
    const auto& blk = cache.enc[b];
    if (blk.pooled) {
      const Tensor& pre_pool = blk.conv_out.back();
      grad = ops::maxpool2d_backward(pre_pool.dims(), blk.pool, grad);
    }
    for (std::size_t c = net.encoder[b].size(); c-- > 0;) {
      const Tensor& conv_in =
          c > 0 ? blk.conv_out[c - 1]
                : (b > 0 ? (cache.enc[b - 1].pooled
                                ? cache.enc[b - 1].pooled_out
                                : cache.enc[b - 1].conv_out.back())
                         : cache.input);
      grad = ops::relu_backward(blk.conv_out[c], grad);
      ops::ConvGrads cg =
          ops::conv2d_backward(conv_in, net.encoder[b][c], grad);
      grads.encoder[b][c] = std::move(cg.kernels);
      grad = std::move(cg.input);
    }
  }
  return grads;
}

Tensor encoder_features(const Network& net, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != net.config.input_h ||
      image.dim(1) != net.config.input_w || image.dim(2) != 3)
    throw ShapeError("encoder_features: image extents do not match config");

  Tensor cur = image;
  for (std::size_t b = 0; b < net.encoder.size(); ++b) {
    for (const auto& k : net.encoder[b]) cur = ops::relu(ops::conv2d(cur, k));
    if (b < net.config.pool_count) cur = ops::maxpool2d(cur).output;
  }
  return cur;
}

}  // namespace gazelab::nn
