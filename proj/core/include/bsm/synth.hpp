#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bsm/image.hpp"

namespace bsm {

/// Synthetic rigid objects at a fixed scale on cluttered backgrounds.
struct SynthParams {
  int width = 160;
  int height = 128;
  /// "notched-disk" or "rounded-square".
  std::string shape = "notched-disk";
  /// Disk radius, or half the square side.
  int object_radius = 26;
  int clutter_shapes = 14;
  double noise = 6.0;  ///< Gaussian pixel noise, 0-255 units

  void validate() const;
  bool operator==(const SynthParams&) const = default;
};

struct SynthSample {
  std::string id;
  RgbImage image;
  BinaryMask mask;
  int cx = 0;  ///< object center, pixels
  int cy = 0;
};

/// Object masks are exact (pixel centers inside the outline) and identical up
/// to translation; the object's texture is fixed by `seed`, the placement and
/// background vary per image. Deterministic in (params, n, seed).
std::vector<SynthSample> generate_synthetic(const SynthParams& params, int n, std::uint64_t seed);

/// The object's mask centred in a canvas of the given size.
BinaryMask synth_object_mask(const SynthParams& params, int width, int height, int cx, int cy);

/// Writes images/<id>.png, masks/<id>.png and manifest.json under `dir`.
/// Throws DataError if the directory cannot be written.
void write_synthetic_dataset(const std::filesystem::path& dir, const std::vector<SynthSample>& samples,
                             const SynthParams& params, std::uint64_t seed);

}  // namespace bsm
