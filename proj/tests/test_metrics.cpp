#include <cmath>
#include <vector>

#include "doctest.h"
#include "gazelab/metrics.hpp"
#include "gazelab/rng.hpp"
#include "oracles.hpp"

using gazelab::Rng;
using gazelab::Tensor;
namespace metrics = gazelab::metrics;

namespace {

metrics::FixationSet fix_at(
    std::initializer_list<std::pair<std::size_t, std::size_t>> pts) {
  metrics::FixationSet f;
  for (const auto& p : pts) f.points.push_back(p);
  return f;
}

}  // namespace

TEST_CASE("nss standardizes with the population deviation") {
  Tensor map({1, 2}, {2.0, 0.0});
  CHECK(metrics::nss(map, fix_at({{0, 0}})) == doctest::Approx(1.0));

  Tensor map2({1, 4}, {3.0, 1.0, 1.0, 1.0});
  CHECK(metrics::nss(map2, fix_at({{0, 0}})) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK(metrics::nss(map2, fix_at({{0, 0}})) ==
        doctest::Approx(1.7321).epsilon(1e-4));
}

TEST_CASE("nss over every pixel averages to zero") {
  Rng rng(3);
  Tensor map = oracle::random_tensor({4, 5}, rng);
  metrics::FixationSet all;
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 5; ++x) all.points.emplace_back(y, x);
  CHECK(metrics::nss(map, all) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nss conventions and validation") {
  Tensor constant(3, 3);
  for (std::size_t i = 0; i < constant.size(); ++i) constant[i] = 0.4;
  CHECK(metrics::nss(constant, fix_at({{1, 1}})) == 0.0);

  Tensor map({2, 2}, {1.0, 2.0, 3.0, 4.0});
  CHECK_THROWS_AS(metrics::nss(map, metrics::FixationSet{}),
                  gazelab::DomainError);
  CHECK_THROWS_AS(metrics::nss(map, fix_at({{2, 0}})), gazelab::DomainError);
  CHECK_THROWS_AS(metrics::nss(map, fix_at({{0, 2}})), gazelab::DomainError);
}

TEST_CASE("nss is invariant under positive affine transforms") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor map = oracle::random_tensor({6, 7}, rng);
    const metrics::FixationSet fix = oracle::random_fixations(6, 7, 9, rng);
    const double base = metrics::nss(map, fix);
    const double alpha = rng.uniform(0.1, 10.0);
    const double beta = rng.uniform(-5.0, 5.0);
    Tensor scaled = map;
    for (std::size_t i = 0; i < scaled.size(); ++i)
      scaled[i] = alpha * scaled[i] + beta;
    CHECK(std::fabs(metrics::nss(scaled, fix) - base) <= 1e-10);
  }
}

TEST_CASE("cc identities") {
  Tensor a({2, 2}, {1.0, 2.0, 3.0, 4.0});
  CHECK(metrics::cc(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  Tensor b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = -a[i] + 5.0;
  CHECK(metrics::cc(a, b) == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK(metrics::cc(a, b) == doctest::Approx(metrics::cc(b, a)));
}

TEST_CASE("cc reproduces the detector-ratio correlation") {
  // Percent-detector x NSS pairs for four models; the published value
  // rounds to 0.94.
  const std::vector<double> xs = {1.0, 2.7, 1.8, 4.1};
  const std::vector<double> ys = {1.68, 2.15, 1.92, 2.21};
  const double r = metrics::pearson(xs, ys);
  CHECK(std::fabs(r - 0.94) <= 0.01);
  CHECK(r == doctest::Approx(0.932440).epsilon(1e-5));
}

TEST_CASE("cc is bounded and rejects degenerate inputs") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = oracle::random_tensor({5, 5}, rng);
    Tensor b = oracle::random_tensor({5, 5}, rng);
    const double r = metrics::cc(a, b);
    CHECK(std::fabs(r) <= 1.0 + 1e-12);
  }
  Tensor constant(2, 2);
  Tensor varying({2, 2}, {1.0, 2.0, 3.0, 4.0});
  CHECK_THROWS_AS(metrics::cc(constant, varying), gazelab::DomainError);
  CHECK_THROWS_AS(metrics::cc(varying, constant), gazelab::DomainError);
  CHECK_THROWS_AS(metrics::cc(varying, Tensor(2, 3)), gazelab::ShapeError);
  CHECK_THROWS_AS(metrics::pearson({1.0, 2.0}, {1.0}), gazelab::ShapeError);
  CHECK_THROWS_AS(metrics::pearson({}, {}), gazelab::ShapeError);
}

TEST_CASE("auc_judd extremes") {
  Tensor map({2, 2}, {0.9, 0.1, 0.2, 0.3});
  CHECK(metrics::auc_judd(map, fix_at({{0, 0}})) == doctest::Approx(1.0));

  Tensor constant(2, 2);
  CHECK(metrics::auc_judd(constant, fix_at({{0, 0}})) ==
        doctest::Approx(0.5));

  // Every pixel fixated leaves no negatives; chance by convention.
  metrics::FixationSet all;
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x) all.points.emplace_back(y, x);
  CHECK(metrics::auc_judd(map, all) == doctest::Approx(0.5));

  CHECK_THROWS_AS(metrics::auc_judd(map, metrics::FixationSet{}),
                  gazelab::DomainError);
  CHECK_THROWS_AS(metrics::auc_judd(map, fix_at({{5, 0}})),
                  gazelab::DomainError);
}

TEST_CASE("auc_judd is invariant under strictly monotone transforms") {
  Rng rng(17);
  Tensor map = oracle::random_tensor({8, 8}, rng, 0.0, 1.0);
  const metrics::FixationSet fix = oracle::random_fixations(8, 8, 12, rng);
  const double base = metrics::auc_judd(map, fix);
  Tensor warped = map;
  for (std::size_t i = 0; i < warped.size(); ++i)
    warped[i] = std::exp(3.0 * warped[i]) + 7.0;
  CHECK(metrics::auc_judd(warped, fix) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("auc_judd equals the exhaustive pairwise oracle") {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h =
        static_cast<std::size_t>(rng.uniform_int(1, 16));
    const std::size_t w =
        static_cast<std::size_t>(rng.uniform_int(1, 16));
    Tensor map(std::vector<std::size_t>{h, w});
    const bool quantized = trial % 2 == 0;
    for (std::size_t i = 0; i < map.size(); ++i)
      map[i] = quantized ? static_cast<double>(rng.uniform_int(0, 4))
                         : rng.uniform();
    // Duplicate fixations on purpose: scoring must deduplicate pixels.
    const std::size_t nfix =
        static_cast<std::size_t>(rng.uniform_int(1, 8));
    metrics::FixationSet fix = oracle::random_fixations(h, w, nfix, rng);
    fix.points.push_back(fix.points.front());

    const double fast = metrics::auc_judd(map, fix);
    const double slow = oracle::pairwise_auc(map, fix);
    CHECK(std::fabs(fast - slow) <= 1e-9);
  }
}

TEST_CASE("sim closed forms") {
  Tensor a({1, 2}, {0.5, 0.5});
  Tensor b({1, 2}, {1.0, 0.0});
  CHECK(metrics::sim(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(metrics::sim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metrics::sim(a, b) == doctest::Approx(metrics::sim(b, a)));

  Tensor left({1, 4}, {1.0, 2.0, 0.0, 0.0});
  Tensor right({1, 4}, {0.0, 0.0, 3.0, 1.0});
  CHECK(metrics::sim(left, right) == doctest::Approx(0.0));

  // Unit-sum normalization makes sim scale-free.
  Tensor scaled = a;
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= 12.5;
  CHECK(metrics::sim(a, scaled) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sim validation") {
  Tensor ok({1, 2}, {0.5, 0.5});
  Tensor negative({1, 2}, {-0.1, 1.0});
  Tensor zero(1, 2);
  CHECK_THROWS_AS(metrics::sim(ok, negative), gazelab::DomainError);
  CHECK_THROWS_AS(metrics::sim(negative, ok), gazelab::DomainError);
  CHECK_THROWS_AS(metrics::sim(ok, zero), gazelab::DomainError);
  CHECK_THROWS_AS(metrics::sim(ok, Tensor(2, 1)), gazelab::ShapeError);
}

TEST_CASE("sim stays in the unit interval") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = oracle::random_tensor({4, 4}, rng, 0.0, 1.0);
    Tensor b = oracle::random_tensor({4, 4}, rng, 0.0, 1.0);
    a[0] += 0.01;  // keep sums positive
    b[0] += 0.01;
    const double s = metrics::sim(a, b);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0 + 1e-12);
  }
}
