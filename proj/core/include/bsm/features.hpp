#pragma once

#include <array>
#include <span>
#include <vector>

#include "bsm/image.hpp"

namespace bsm {

struct Keypoint {
  double x = 0;
  double y = 0;
  /// Characteristic scale in pixels; the descriptor window side is
  /// patch_factor * scale.
  double scale = 1;
  double response = 0;

  bool operator==(const Keypoint&) const = default;
};

inline constexpr int kSiftCells = 4;
inline constexpr int kSiftBins = 8;
inline constexpr int kSiftLength = kSiftCells * kSiftCells * kSiftBins;

/// 4x4 cells of 8-bin orientation histograms. Bin index is
/// (row * 4 + col) * 8 + orientation; rows run top to bottom, orientation
/// bin b is centered on 45*b degrees measured clockwise from +x in image
/// coordinates (y down).
struct SiftDescriptor {
  std::array<double, kSiftLength> bins{};

  double& operator[](int i) { return bins[i]; }
  double operator[](int i) const { return bins[i]; }
  double cell_bin(int row, int col, int orientation) const {
    return bins[(row * kSiftCells + col) * kSiftBins + orientation];
  }
  bool is_zero() const;
  double norm() const;

  bool operator==(const SiftDescriptor&) const = default;
};

struct DetectorParams {
  double harris_k = 0.04;
  int levels_per_octave = 5;
  int octaves = 3;
  double sigma0 = 1.6;
  /// Harris response threshold relative to the maximum response.
  double rel_threshold = 1e-4;
  /// Derivation scale as a fraction of integration scale.
  double derivation_ratio = 0.7;
  double dog_threshold = 0.01;
  double edge_ratio = 10.0;
  double merge_radius = 2.0;
  /// Keep at most this many keypoints (strongest first); 0 keeps all.
  int max_keypoints = 1500;

  bool operator==(const DetectorParams&) const = default;
};

struct SiftParams {
  double patch_factor = 6.0;
  double clamp = 0.2;

  bool operator==(const SiftParams&) const = default;
};

/// Multi-scale Harris corners with Laplacian scale selection, followed by
/// difference-of-Gaussian extrema. Images smaller than 32x32 yield nothing.
std::vector<Keypoint> detect_harris_laplace(const GrayImage& img,
                                            const DetectorParams& params = {});

/// Upright SIFT descriptor. Throws std::invalid_argument if the window lies
/// completely outside the image.
SiftDescriptor compute_sift(const GrayImage& img, const Keypoint& kp,
                            const SiftParams& params = {});

/// Regular grid of keypoints over the rectangle, one layer per scale.
std::vector<Keypoint> dense_sample(const Rect& roi, double stride, std::span<const double> scales);

}  // namespace bsm
