#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "bsm/features.hpp"
#include "bsm/image.hpp"

namespace bsm {

inline constexpr double kDefaultBeta = 0.4;
inline constexpr int kShapeCells = kSiftCells * kSiftCells;

/// Quantized boundary shape: each of the 4x4 cells holds an 8-bin binary
/// orientation histogram. Layout matches SiftDescriptor.
struct ShapeDescriptor {
  std::array<std::uint8_t, kSiftLength> bins{};

  std::uint8_t bin(int cell, int orientation) const { return bins[cell * kSiftBins + orientation]; }
  bool cell_empty(int cell) const;
  bool is_empty() const;
  int active_count() const;

  bool operator==(const ShapeDescriptor&) const = default;
};

/// Signed foreground (+) / background (-) strength per cell, row-major.
struct StrengthGrid {
  std::array<double, kShapeCells> upsilon{};

  double& operator[](int cell) { return upsilon[cell]; }
  double operator[](int cell) const { return upsilon[cell]; }

  StrengthGrid& operator+=(const StrengthGrid& o);
  StrengthGrid operator*(double s) const;
  bool operator==(const StrengthGrid&) const = default;
};

/// Bin i is active iff d(i) > beta * max d. Throws unless 0 < beta < 1.
ShapeDescriptor quantize(const SiftDescriptor& d, double beta = kDefaultBeta);

/// Cell strengths from the boundary cells' histograms, with propagation into
/// cells that have no boundary neighbour. Every cell is assigned.
StrengthGrid cell_strengths(const ShapeDescriptor& sd);

/// Number of propagation passes cell_strengths needed (0 when no cell required
/// propagation). Exposed for termination checks.
int propagation_passes(const ShapeDescriptor& sd);

ShapeDescriptor extract_shape_descriptor(const BinaryMask& mask, const Keypoint& kp,
                                         double beta = kDefaultBeta,
                                         const SiftParams& params = {});

/// Offsets of the 8 neighbours of a cell, indexed clockwise from the right
/// (+x) in image coordinates (y down).
inline constexpr std::array<std::array<int, 2>, 8> kNeighborOffsets{{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

/// Text rendering of a descriptor and its strengths for inspection and golden
/// files. Each cell shows its active orientations as digits, or '.' if empty.
std::string render_ascii(const ShapeDescriptor& sd, const StrengthGrid& strengths);

/// Renders the descriptor as an 8-bit PGM (P2) picture: cells of `cell_px`
/// pixels with one line segment per active bin, strength as background shade.
std::string render_pgm(const ShapeDescriptor& sd, const StrengthGrid& strengths, int cell_px = 15);

}  // namespace bsm
