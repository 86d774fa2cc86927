#include <vector>

#include "doctest.h"
#include "gazelab/network.hpp"
#include "gazelab/rng.hpp"
#include "oracles.hpp"

using gazelab::Rng;
using gazelab::Tensor;
namespace nn = gazelab::nn;
namespace ops = gazelab::ops;

namespace {

nn::NetworkConfig toy_config() {
  nn::NetworkConfig cfg;
  cfg.input_h = 64;
  cfg.input_w = 64;
  cfg.encoder_blocks = {{2, 8}, {2, 16}};
  cfg.pool_count = 2;
  cfg.seed = 3;
  return cfg;
}

nn::NetworkConfig tiny_config() {
  nn::NetworkConfig cfg;
  cfg.input_h = 8;
  cfg.input_w = 8;
  cfg.encoder_blocks = {{1, 2}, {1, 3}};
  cfg.pool_count = 1;
  cfg.seed = 5;
  return cfg;
}

void zero_kernels(gazelab::KernelSet& k) {
  for (std::size_t i = 0; i < k.weights.size(); ++i) k.weights[i] = 0.0;
  for (std::size_t i = 0; i < k.bias.size(); ++i) k.bias[i] = 0.0;
}

}  // namespace

TEST_CASE("config validation rejects inconsistent settings") {
  nn::NetworkConfig cfg = toy_config();
  CHECK_NOTHROW(cfg.validate());

  SUBCASE("no encoder blocks") {
    cfg.encoder_blocks.clear();
    CHECK_THROWS_AS(cfg.validate(), gazelab::ConfigError);
  }
  SUBCASE("pool count above block count") {
    cfg.pool_count = 3;
    CHECK_THROWS_AS(cfg.validate(), gazelab::ConfigError);
  }
  SUBCASE("pool count zero") {
    cfg.pool_count = 0;
    CHECK_THROWS_AS(cfg.validate(), gazelab::ConfigError);
  }
  SUBCASE("input not divisible by the pooling factor") {
    cfg.input_h = 62;
    CHECK_THROWS_AS(cfg.validate(), gazelab::ConfigError);
  }
  SUBCASE("decoder plan length must match pool count") {
    cfg.decoder_channel_plan = {8, 8, 8};
    CHECK_THROWS_AS(cfg.validate(), gazelab::ConfigError);
  }
}

TEST_CASE("default decoder plan halves per block with a floor of 64") {
  nn::NetworkConfig cfg;
  cfg.input_h = 240;
  cfg.input_w = 320;
  cfg.encoder_blocks = {{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}};
  cfg.pool_count = 4;
  CHECK(cfg.encoder_out_channels() == 512);
  CHECK(cfg.effective_decoder_plan() ==
        std::vector<std::size_t>{256, 128, 64, 64});
}

TEST_CASE("default decoder plan for narrow encoders floors at one") {
  nn::NetworkConfig cfg = toy_config();
  CHECK(cfg.encoder_out_channels() == 16);
  CHECK(cfg.effective_decoder_plan() == std::vector<std::size_t>{8, 4});
}

TEST_CASE("explicit decoder plan wins over the default") {
  nn::NetworkConfig cfg = toy_config();
  cfg.decoder_channel_plan = {5, 7};
  CHECK(cfg.effective_decoder_plan() == std::vector<std::size_t>{5, 7});
}

TEST_CASE("forward produces the documented intermediate shapes") {
  const nn::NetworkConfig cfg = toy_config();
  nn::Network net = nn::build_network(cfg);

  Rng rng(7);
  const Tensor image = oracle::random_tensor({64, 64, 3}, rng, 0.0, 1.0);
  const auto [saliency, cache] = nn::forward(net, image);

  CHECK(cache.encoder_output.dims() == std::vector<std::size_t>{16, 16, 16});
  CHECK(saliency.dims() == std::vector<std::size_t>{64, 64});

  // Decoder stages double spatial extents back up.
  REQUIRE(cache.dec.size() == 2);
  CHECK(cache.dec[0].out.dims() == std::vector<std::size_t>{32, 32, 8});
  CHECK(cache.dec[1].out.dims() == std::vector<std::size_t>{64, 64, 4});

  const Tensor features = nn::encoder_features(net, image);
  REQUIRE(features.same_dims(cache.encoder_output));
  for (std::size_t i = 0; i < features.size(); ++i)
    CHECK(features[i] == cache.encoder_output[i]);
}

TEST_CASE("head bias alone yields a constant saliency map") {
  nn::Network net = nn::build_network(tiny_config());
  for (auto& block : net.decoder) {
    zero_kernels(block.reduce);
    zero_kernels(block.refine);
    zero_kernels(block.up);
  }
  zero_kernels(net.head);
  net.head.bias[0] = 0.37;

  Rng rng(9);
  const Tensor image = oracle::random_tensor({8, 8, 3}, rng, 0.0, 1.0);
  const Tensor map = nn::predict(net, image);
  REQUIRE(map.dims() == std::vector<std::size_t>{8, 8});
  for (std::size_t i = 0; i < map.size(); ++i)
    CHECK(map[i] == doctest::Approx(0.37));
}

TEST_CASE("zero refine conv reduces the residual block to its first branch") {
  nn::Network net = nn::build_network(tiny_config());
  zero_kernels(net.decoder[0].refine);

  Rng rng(13);
  const Tensor image = oracle::random_tensor({8, 8, 3}, rng, 0.0, 1.0);
  const auto [saliency, cache] = nn::forward(net, image);

  const auto& dec = cache.dec[0];
  for (std::size_t i = 0; i < dec.f2.size(); ++i) CHECK(dec.f2[i] == 0.0);
  for (std::size_t i = 0; i < dec.summed.size(); ++i)
    CHECK(dec.summed[i] == dec.f1[i]);

  const Tensor direct =
      ops::relu(ops::deconv2d(dec.f1, net.decoder[0].up));
  for (std::size_t i = 0; i < direct.size(); ++i)
    CHECK(dec.out[i] == doctest::Approx(direct[i]));
}

TEST_CASE("residual sum feeds the upsampler") {
  nn::Network net = nn::build_network(tiny_config());
  Rng rng(17);
  const Tensor image = oracle::random_tensor({8, 8, 3}, rng, 0.0, 1.0);
  const auto [saliency, cache] = nn::forward(net, image);

  const auto& dec = cache.dec[0];
  const Tensor expect_sum = ops::add(dec.f1, dec.f2);
  for (std::size_t i = 0; i < expect_sum.size(); ++i)
    CHECK(dec.summed[i] == doctest::Approx(expect_sum[i]));
  const Tensor expect_out =
      ops::relu(ops::deconv2d(dec.summed, net.decoder[0].up));
  for (std::size_t i = 0; i < expect_out.size(); ++i)
    CHECK(dec.out[i] == doctest::Approx(expect_out[i]));
}

TEST_CASE("builds are deterministic per seed") {
  const nn::NetworkConfig cfg = toy_config();
  nn::Network a = nn::build_network(cfg);
  nn::Network b = nn::build_network(cfg);

  std::vector<double> flat_a, flat_b;
  a.visit_params([&](const std::string&, const gazelab::KernelSet& k) {
    flat_a.insert(flat_a.end(), k.weights.values().begin(),
                  k.weights.values().end());
    flat_a.insert(flat_a.end(), k.bias.begin(), k.bias.end());
  });
  b.visit_params([&](const std::string&, const gazelab::KernelSet& k) {
    flat_b.insert(flat_b.end(), k.weights.values().begin(),
                  k.weights.values().end());
    flat_b.insert(flat_b.end(), k.bias.begin(), k.bias.end());
  });
  CHECK(flat_a == flat_b);

  nn::NetworkConfig other = cfg;
  other.seed = cfg.seed + 1;
  nn::Network c = nn::build_network(other);
  std::vector<double> flat_c;
  c.visit_params([&](const std::string&, const gazelab::KernelSet& k) {
    flat_c.insert(flat_c.end(), k.weights.values().begin(),
                  k.weights.values().end());
  });
  bool all_equal = flat_c.size() <= flat_a.size();
  for (std::size_t i = 0; i < flat_c.size() && all_equal; ++i)
    all_equal = flat_c[i] == flat_a[i];
  CHECK(!all_equal);
}

TEST_CASE("fresh networks have zero biases and finite weights") {
  nn::Network net = nn::build_network(toy_config());
  net.visit_params([](const std::string&, const gazelab::KernelSet& k) {
    CHECK(k.weights.all_finite());
    for (std::size_t i = 0; i < k.bias.size(); ++i) CHECK(k.bias[i] == 0.0);
  });
  CHECK(net.param_count() > 0);
}

TEST_CASE("parameter visit order is stable and fully named") {
  nn::Network net = nn::build_network(tiny_config());
  std::vector<std::string> names;
  net.visit_params([&](const std::string& name, const gazelab::KernelSet&) {
    names.push_back(name);
  });
  CHECK(names == std::vector<std::string>{"enc1.conv1", "enc2.conv1",
                                          "dec1.reduce", "dec1.refine",
                                          "dec1.up", "head"});
}

TEST_CASE("network gradients match finite differences") {
  // Wider blocks than tiny_config: a 1-channel decoder stage can die
  // entirely under random init, parking the relu inputs exactly on the
  // kink where central differences disagree with the (correct) analytic
  // zero. The liveness checks below reject such degenerate draws.
  nn::NetworkConfig cfg;
  cfg.input_h = 8;
  cfg.input_w = 8;
  cfg.encoder_blocks = {{1, 4}, {1, 6}};
  cfg.pool_count = 1;
  cfg.seed = 5;
  nn::Network net = nn::build_network(cfg);
  Rng rng(23);
  // Fresh nets have all-zero biases, which parks every relu fed by a dead
  // pixel exactly on its kink; perturbing a bias then straddles the kink
  // and the difference quotient sees a spurious half-slope. Nudging the
  // biases makes the evaluation point generic.
  net.visit_params([&](const std::string&, gazelab::KernelSet& k) {
    for (double& b : k.bias) b = rng.uniform(0.02, 0.08);
  });
  const Tensor image = oracle::random_tensor({8, 8, 3}, rng, 0.05, 1.0);
  Tensor probe = oracle::random_tensor({8, 8}, rng);

  const auto [saliency, cache] = nn::forward(net, image);
  REQUIRE(cache.encoder_output.max_value() > 0.05);
  for (const auto& dc : cache.dec) {
    REQUIRE(dc.f1.max_value() > 0.05);
    REQUIRE(dc.f2.max_value() > 0.05);
    REQUIRE(dc.out.max_value() > 0.05);
  }
  const nn::NetworkGrads grads = nn::backward(net, cache, probe);

  // Objective: <saliency, probe>, differentiated against every parameter.
  auto loss_with = [&](nn::Network& candidate) {
    const Tensor out = nn::predict(candidate, image);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
    return s;
  };

  double worst = 0.0;
  const double step = 1e-5;
  std::vector<std::pair<std::string, gazelab::KernelSet*>> params;
  net.visit_params([&](const std::string& name, gazelab::KernelSet& k) {
    params.emplace_back(name, &k);
  });
  std::vector<std::pair<std::string, const gazelab::KernelSet*>> gslots;
  grads.visit([&](const std::string& name, const gazelab::KernelSet& g) {
    gslots.emplace_back(name, &g);
  });
  REQUIRE(params.size() == gslots.size());

  for (std::size_t p = 0; p < params.size(); ++p) {
    CHECK(params[p].first == gslots[p].first);
    auto check_buffer = [&](auto& values, const auto& analytic) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + step;
        const double hi = loss_with(net);
        values[i] = saved - step;
        const double lo = loss_with(net);
        values[i] = saved;
        const double fd = (hi - lo) / (2.0 * step);
        worst = std::max(worst, oracle::rel_err(analytic[i], fd));
      }
    };
    check_buffer(params[p].second->weights, gslots[p].second->weights);
    check_buffer(params[p].second->bias, gslots[p].second->bias);
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("backward is pure and repeatable") {
  nn::Network net = nn::build_network(tiny_config());
  Rng rng(29);
  const Tensor image = oracle::random_tensor({8, 8, 3}, rng, 0.0, 1.0);
  const Tensor probe = oracle::random_tensor({8, 8}, rng);

  const auto [saliency, cache] = nn::forward(net, image);
  const nn::NetworkGrads g1 = nn::backward(net, cache, probe);
  const nn::NetworkGrads g2 = nn::backward(net, cache, probe);

  std::vector<double> flat1, flat2;
  g1.visit([&](const std::string&, const gazelab::KernelSet& k) {
    flat1.insert(flat1.end(), k.weights.values().begin(),
                 k.weights.values().end());
  });
  g2.visit([&](const std::string&, const gazelab::KernelSet& k) {
    flat2.insert(flat2.end(), k.weights.values().begin(),
                 k.weights.values().end());
  });
  CHECK(flat1 == flat2);

  const Tensor again = nn::predict(net, image);
  for (std::size_t i = 0; i < again.size(); ++i)
    CHECK(again[i] == saliency[i]);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  nn::Network net = nn::build_network(tiny_config());
  Rng rng(31);
  const Tensor image = oracle::random_tensor({8, 8, 3}, rng, 0.0, 1.0);
  const auto [saliency, cache] = nn::forward(net, image);
  const nn::NetworkGrads grads = nn::backward(net, cache, Tensor(8, 8));
  grads.visit([](const std::string&, const gazelab::KernelSet& k) {
    for (std::size_t i = 0; i < k.weights.size(); ++i)
      CHECK(k.weights[i] == 0.0);
    for (std::size_t i = 0; i < k.bias.size(); ++i) CHECK(k.bias[i] == 0.0);
  });
}

TEST_CASE("forward and backward validate their inputs") {
  nn::Network net = nn::build_network(tiny_config());
  CHECK_THROWS_AS(nn::predict(net, Tensor(4, 8, 3)), gazelab::ShapeError);
  CHECK_THROWS_AS(nn::predict(net, Tensor(8, 8)), gazelab::ShapeError);

  Rng rng(37);
  const Tensor image = oracle::random_tensor({8, 8, 3}, rng, 0.0, 1.0);
  const auto [saliency, cache] = nn::forward(net, image);
  CHECK_THROWS_AS(nn::backward(net, cache, Tensor(4, 4)),
                  gazelab::ShapeError);

  nn::ActivationCache empty;
  CHECK_THROWS_AS(nn::backward(net, empty, Tensor(8, 8)),
                  gazelab::StateError);
  CHECK_THROWS_AS(nn::encoder_features(net, Tensor(6, 8, 3)),
                  gazelab::ShapeError);
}
