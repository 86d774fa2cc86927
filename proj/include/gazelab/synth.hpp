#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gazelab/rng.hpp"
#include "gazelab/trainer.hpp"

namespace gazelab {

// Shape and sampling parameters for the generator. A blob's footprint is
// (2*radius + 1) pixels across, so max_radius must fit inside the image.
struct BlobSpec {
  std::size_t min_radius = 4;
  std::size_t max_radius = 10;
  double sigma_scale = 1.2;        // gaussian sigma = sigma_scale * radius
  std::size_t min_blobs = 1;
  std::size_t max_blobs = 3;
  std::size_t fixation_count = 20;

  void validate(std::size_t h, std::size_t w) const;
};

// Gaze sample plus per-class binary masks of the planted shapes.
struct SynthSample {
  GazeSample gaze;
  std::map<std::string, Tensor> masks;  // class name -> rank-2 {0,1} mask
};

// The shape classes the generator can plant.
const std::vector<std::string>& synth_classes();

// Draws `count` fixations from a non-negative density by inverse-CDF over
// the flattened map. Zero-sum density -> domain error.
metrics::FixationSet sample_fixations(const Tensor& density,
                                      std::size_t count, Rng& rng);

// 1..3 high-contrast shapes on a textured background; density is the
// max-normalized sum of isotropic gaussians centered on the shapes.
// Deterministic per (seed, index).
std::vector<SynthSample> synth_labeled_dataset(std::uint64_t seed,
                                               std::size_t count,
                                               std::size_t h, std::size_t w,
                                               const BlobSpec& spec);

std::vector<GazeSample> synth_dataset(std::uint64_t seed, std::size_t count,
                                      std::size_t h, std::size_t w,
                                      const BlobSpec& spec);

}  // namespace gazelab
