#ifndef GAZELAB_NETWORK_HPP
#define GAZELAB_NETWORK_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gazelab/ops.hpp"
#include "gazelab/tensor.hpp"

namespace gazelab::nn {

// Encoder block: conv_count 3x3 convolutions (each followed by ReLU) to
// out_channels maps; the first pool_count blocks end with a 2x2 max pool.
struct EncoderBlockSpec {
  std::size_t conv_count = 2;
  std::size_t out_channels = 8;
};

struct NetworkConfig {
  std::size_t input_h = 64;
  std::size_t input_w = 64;
  std::vector<EncoderBlockSpec> encoder_blocks;
  std::size_t pool_count = 2;
  // Per-decoder-block channel counts (one entry per pooled resolution to
  // recover). Empty means: halve per block, holding at 64 once reached when
  // the encoder output is wider than 64 maps.
  std::vector<std::size_t> decoder_channel_plan;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t encoder_out_channels() const;
  // The effective plan: the explicit one, or the derived default.
  std::vector<std::size_t> effective_decoder_plan() const;
};

struct DecoderBlock {
  KernelSet reduce;  // 3x3 dimension-reduction conv
  KernelSet refine;  // 3x3 conv on the reduced tensor
  KernelSet up;      // 2x2 stride-2 transposed conv
};

// Encoder + residual-decoder saliency network. The decoder block n computes
//   f1 = relu(reduce(x))   f2 = relu(refine(f1))   out = relu(up(f1 + f2))
// and the head is a single 3x3 convolution to one channel with no squashing.
struct Network {
  NetworkConfig config;
  std::vector<std::vector<KernelSet>> encoder;  // [block][conv]
  std::vector<DecoderBlock> decoder;
  KernelSet head;

  // Visits every parameter set in a fixed order with a stable name.
  void visit_params(
      const std::function<void(const std::string&, KernelSet&)>& fn);
  void visit_params(
      const std::function<void(const std::string&, const KernelSet&)>& fn)
      const;
  std::size_t param_count() const;
};

// Gradient buffers shaped like the network's parameters.
struct NetworkGrads {
  std::vector<std::vector<KernelSet>> encoder;
  std::vector<DecoderBlock> decoder;
  KernelSet head;

  static NetworkGrads zeros_like(const Network& net);
  void accumulate_scaled(const NetworkGrads& other, double scale);
  void visit(const std::function<void(const std::string&, KernelSet&)>& fn);
  void visit(
      const std::function<void(const std::string&, const KernelSet&)>& fn)
      const;
};

// Every intermediate needed by the backward pass. ReLU outputs double as
// the next stage's input, so each tensor is stored once.
struct ActivationCache {
  Tensor input;
  struct EncBlock {
    std::vector<Tensor> conv_out;  // post-ReLU output of each conv
    ops::PoolResult pool;          // only when the block pools
    bool pooled = false;
    Tensor pooled_out;
  };
  std::vector<EncBlock> enc;
  Tensor encoder_output;
  struct DecBlock {
    Tensor f1;      // post-ReLU reduce output
    Tensor f2;      // post-ReLU refine output
    Tensor summed;  // f1 + f2 (deconv input)
    Tensor out;     // post-ReLU deconv output
  };
  std::vector<DecBlock> dec;
};

// Fresh network with fan-in-scaled zero-mean Gaussian weights and zero
// biases; deterministic for a given seed.
Network build_network(const NetworkConfig& config);

// Full forward pass: image h x w x 3 -> saliency map h x w plus the cache
// for backward.
std::pair<Tensor, ActivationCache> forward(const Network& net,
                                           const Tensor& image);

// Saliency-only forward (no cache retention beyond the call).
Tensor predict(const Network& net, const Tensor& image);

// Backpropagates d loss / d saliency through the cached forward pass and
// returns gradients for every parameter.
NetworkGrads backward(const Network& net, const ActivationCache& cache,
                      const Tensor& grad_saliency);

// The encoder half only: image -> M x N x K feature tensor.
Tensor encoder_features(const Network& net, const Tensor& image);

}  // namespace gazelab::nn

#endif  // GAZELAB_NETWORK_HPP
