#include "gazelab/synth.hpp"

#include <algorithm>
#include <cmath>

#include "gazelab/error.hpp"

namespace gazelab {

void BlobSpec::validate(std::size_t h, std::size_t w) const {
  if (min_radius < 1 || max_radius < min_radius)
    throw ConfigError("synth: need 1 <= min_radius <= max_radius");
  if (2 * max_radius + 1 > std::min(h, w))
    throw ConfigError("synth: blob larger than image");
  if (min_blobs < 1 || max_blobs < min_blobs)
    throw ConfigError("synth: need 1 <= min_blobs <= max_blobs");
  if (!(sigma_scale > 0.0))
    throw ConfigError("synth: sigma_scale must be > 0");
  if (fixation_count < 15)
    throw ConfigError("synth: need at least 15 fixations per sample");
}

const std::vector<std::string>& synth_classes() {
  static const std::vector<std::string> classes = {"disk", "square", "bar"};
  return classes;
}

metrics::FixationSet sample_fixations(const Tensor& density,
                                      std::size_t count, Rng& rng) {
  if (density.rank() != 2)
    throw ShapeError("sample_fixations: density must be rank 2");
  const auto& vals = density.values();
  std::vector<double> cum(vals.size());
  double total = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] < 0.0)
      throw DomainError("sample_fixations: density must be non-negative");
    total += vals[i];
    cum[i] = total;
  }
  if (!(total > 0.0))
    throw DomainError("sample_fixations: density sums to zero");

  const std::size_t w = density.dim(1);
  metrics::FixationSet fix;
  for (std::size_t k = 0; k < count; ++k) {
    const double u = rng.uniform(0.0, total);
    const std::size_t flat = static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    const std::size_t clamped = std::min(flat, vals.size() - 1);
    fix.points.emplace_back(clamped / w, clamped % w);
  }
  return fix;
}

namespace {

struct Blob {
  std::size_t cls;  // index into synth_classes()
  std::size_t cy, cx, radius;
  bool vertical;    // bar orientation
};

bool blob_covers(const Blob& b, std::size_t y, std::size_t x) {
  const double dy = static_cast<double>(y) - static_cast<double>(b.cy);
  const double dx = static_cast<double>(x) - static_cast<double>(b.cx);
  const double r = static_cast<double>(b.radius);
  switch (b.cls) {
    case 0:  // disk
      return dy * dy + dx * dx <= r * r;
    case 1:  // square
      return std::abs(dy) <= r && std::abs(dx) <= r;
    default: {  // bar
      const double thin = std::max(1.0, r / 3.0);
      return b.vertical ? (std::abs(dx) <= thin && std::abs(dy) <= r)
                        : (std::abs(dy) <= thin && std::abs(dx) <= r);
    }
  }
}

SynthSample make_sample(std::size_t h, std::size_t w, const BlobSpec& spec,
                        Rng& rng) {
  SynthSample sample;
  Tensor image(h, w, 3);

  // Low-contrast textured background.
  const double base = rng.uniform(0.15, 0.35);
  double tint[3];
  for (double& t : tint) t = base + rng.uniform(-0.04, 0.04);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double noise = rng.uniform(-0.06, 0.06);
      for (std::size_t c = 0; c < 3; ++c)
        image.at(y, x, c) = std::clamp(tint[c] + noise, 0.0, 1.0);
    }

  const std::size_t n_blobs =
      rng.uniform_int(spec.min_blobs, spec.max_blobs);
  std::vector<Blob> blobs;
  for (std::size_t i = 0; i < n_blobs; ++i) {
    Blob b;
    b.cls = rng.uniform_int(0, synth_classes().size() - 1);
    b.radius = rng.uniform_int(spec.min_radius, spec.max_radius);
    b.cy = rng.uniform_int(b.radius, h - 1 - b.radius);
    b.cx = rng.uniform_int(b.radius, w - 1 - b.radius);
    b.vertical = rng.uniform() < 0.5;
    blobs.push_back(b);

    double color[3];
    for (double& c : color) c = rng.uniform(0.75, 1.0);

    const std::string& cls = synth_classes()[b.cls];
    auto [it, inserted] = sample.masks.try_emplace(cls, Tensor(h, w));
    Tensor& mask = it->second;
    (void)inserted;
    const std::size_t y0 = b.cy - b.radius, y1 = b.cy + b.radius;
    const std::size_t x0 = b.cx - b.radius, x1 = b.cx + b.radius;
    for (std::size_t y = y0; y <= y1; ++y)
      for (std::size_t x = x0; x <= x1; ++x)
        if (blob_covers(b, y, x)) {
          for (std::size_t c = 0; c < 3; ++c) image.at(y, x, c) = color[c];
          mask.at(y, x) = 1.0;
        }
  }

  Tensor density(h, w);
  for (const Blob& b : blobs) {
    const double sigma = spec.sigma_scale * static_cast<double>(b.radius);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = static_cast<double>(y) - static_cast<double>(b.cy);
        const double dx = static_cast<double>(x) - static_cast<double>(b.cx);
        density.at(y, x) += std::exp(-(dy * dy + dx * dx) * inv);
      }
  }
  const double peak = density.max_value();
  for (double& v : density.values()) v /= peak;  // max becomes exactly 1

  sample.gaze.image = std::move(image);
  sample.gaze.fixations = sample_fixations(density, spec.fixation_count, rng);
  sample.gaze.density = std::move(density);
  return sample;
}

}  // namespace

std::vector<SynthSample> synth_labeled_dataset(std::uint64_t seed,
                                               std::size_t count,
                                               std::size_t h, std::size_t w,
                                               const BlobSpec& spec) {
  spec.validate(h, w);
  std::vector<SynthSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(Rng::derive_seed(seed, 0x73796e7468 + i));  // "synth" + index
    out.push_back(make_sample(h, w, spec, rng));
  }
  return out;
}

std::vector<GazeSample> synth_dataset(std::uint64_t seed, std::size_t count,
                                      std::size_t h, std::size_t w,
                                      const BlobSpec& spec) {
  std::vector<SynthSample> labeled =
      synth_labeled_dataset(seed, count, h, w, spec);
  std::vector<GazeSample> out;
  out.reserve(labeled.size());
  for (auto& s : labeled) out.push_back(std::move(s.gaze));
  return out;
}

}  // namespace gazelab
