#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "bsm/codebook.hpp"
#include "bsm/features.hpp"
#include "bsm/image.hpp"

namespace bsm::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Mask with foreground where `inside(x, y)` holds at pixel centres.
BinaryMask mask_from(int width, int height, const std::function<bool(double, double)>& inside);

/// A bright axis-aligned square of side `side` centred in a dark canvas.
GrayImage square_image(int size, int side);

/// A non-negative unit-norm descriptor with uniform random bins.
SiftDescriptor random_descriptor(std::mt19937_64& rng);

/// Unit descriptor concentrated on bin `k` with a small random spread.
SiftDescriptor peaked_descriptor(int k, double spread, std::mt19937_64& rng);

std::string read_file(const std::filesystem::path& path);

/// A model with `codewords` codewords, each having `occurrences` occurrences
/// at the given offset and unit scale. Every shape entry carries `strengths`.
Model toy_model(int codewords, int occurrences, const StrengthGrid& strengths = {});

}  // namespace bsm::testing
