#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>

#include "bsm/shape_descriptor.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace bsm {
namespace {

using Inside = std::function<bool(double, double)>;

struct EdgeCase {
  std::string name;
  Inside inside;
};

// Foreground regions around the point (48, 48) of a 96x96 canvas.
std::vector<EdgeCase> edge_cases() {
  return {
      {"right", [](double x, double) { return x >= 48; }},
      {"left", [](double x, double) { return x < 48; }},
      {"below", [](double, double y) { return y >= 48; }},
      {"above", [](double, double y) { return y < 48; }},
      {"diagonal", [](double x, double y) { return x + y >= 96; }},
      {"antidiagonal", [](double x, double y) { return x - y >= 0; }},
      {"corner_se", [](double x, double y) { return x >= 48 && y >= 48; }},
      {"corner_nw", [](double x, double y) { return x < 48 && y < 48; }},
  };
}

double cell_width(const Keypoint& kp) { return SiftParams{}.patch_factor * kp.scale / kSiftCells; }

std::array<double, 2> cell_centre(const Keypoint& kp, int cell) {
  const double w = cell_width(kp);
  return {kp.x + ((cell % kSiftCells) - 1.5) * w, kp.y + ((cell / kSiftCells) - 1.5) * w};
}

TEST(Quantize, ThresholdExamples) {
  SiftDescriptor d;
  d[0] = 100;
  d[1] = 50;
  d[2] = 30;
  d[3] = 40;
  const ShapeDescriptor sd = quantize(d, 0.4);
  EXPECT_EQ(sd.bins[0], 1);
  EXPECT_EQ(sd.bins[1], 1);
  EXPECT_EQ(sd.bins[2], 0);
  EXPECT_EQ(sd.bins[3], 0);  // exactly at the threshold
  EXPECT_EQ(sd.active_count(), 2);
}

TEST(Quantize, ZeroDescriptorIsEmpty) { EXPECT_TRUE(quantize(SiftDescriptor{}, 0.4).is_empty()); }

TEST(Quantize, BetaOutsideUnitIntervalThrows) {
  EXPECT_THROW(quantize(SiftDescriptor{}, 0.0), std::invalid_argument);
  EXPECT_THROW(quantize(SiftDescriptor{}, 1.0), std::invalid_argument);
}

TEST(Quantize, MatchesBruteForceOnRandomDescriptors) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const SiftDescriptor d = testing::random_descriptor(rng);
    const ShapeDescriptor sd = quantize(d, 0.4);
    const std::vector<int> expected = oracle::active_bins(d, 0.4);
    std::vector<int> got;
    for (int i = 0; i < kSiftLength; ++i) {
      if (sd.bins[i]) got.push_back(i);
    }
    EXPECT_EQ(got, expected);
  }
}

TEST(CellStrengths, LeftNeighbourExample) {
  ShapeDescriptor sd;
  const int left = 4, cell = 5;  // row 1: cell 4 is directly left of cell 5
  sd.bins[left * kSiftBins + 0] = 1;
  const StrengthGrid g = cell_strengths(sd);
  EXPECT_EQ(g[cell], 1.0);
  EXPECT_EQ(g[left], 0.0);
}

TEST(CellStrengths, OppositeBinGivesBackground) {
  ShapeDescriptor sd;
  sd.bins[4 * kSiftBins + 4] = 1;
  EXPECT_EQ(cell_strengths(sd)[5], -1.0);
}

TEST(CellStrengths, NonEmptyCellsAreZero) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const ShapeDescriptor sd = quantize(testing::random_descriptor(rng), 0.4);
    const StrengthGrid g = cell_strengths(sd);
    for (int c = 0; c < kShapeCells; ++c) {
      if (!sd.cell_empty(c)) EXPECT_EQ(g[c], 0.0);
    }
  }
}

TEST(CellStrengths, EmptyDescriptorGivesZeroGrid) {
  EXPECT_EQ(cell_strengths(ShapeDescriptor{}), StrengthGrid{});
  EXPECT_EQ(propagation_passes(ShapeDescriptor{}), 0);
}

TEST(CellStrengths, PropagationTerminatesWithinSixteenPasses) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> bin(0, kSiftLength - 1), count(1, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    ShapeDescriptor sd;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) sd.bins[bin(rng)] = 1;
    EXPECT_LE(propagation_passes(sd), 16);
    for (double v : cell_strengths(sd).upsilon) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(CellStrengths, SingleCornerCellNeedsThreePasses) {
  ShapeDescriptor sd;
  sd.bins[0 * kSiftBins + 0] = 1;  // top-left cell, bin pointing right
  // Only cell 1 gets direct evidence; rows 1, 2 and 3 follow one pass each.
  EXPECT_EQ(propagation_passes(sd), 3);
  EXPECT_EQ(cell_strengths(sd)[1], 1.0);
}

TEST(ShapeDescriptor, InteriorKeypointIsEmpty) {
  const BinaryMask m(96, 96, 1);
  EXPECT_TRUE(extract_shape_descriptor(m, {48, 48, 3.5, 0}).is_empty());
}

TEST(ShapeDescriptor, VerticalBoundaryActivatesOnlyZeroDegrees) {
  const BinaryMask m = testing::mask_from(96, 96, [](double x, double) { return x >= 48; });
  const ShapeDescriptor sd = extract_shape_descriptor(m, {47.5, 48, 3.5, 0});
  ASSERT_FALSE(sd.is_empty());
  for (int c = 0; c < kShapeCells; ++c) {
    for (int b = 1; b < kSiftBins; ++b) EXPECT_EQ(sd.bin(c, b), 0) << "cell " << c << " bin " << b;
    const int col = c % kSiftCells;
    EXPECT_EQ(!sd.cell_empty(c), col == 1 || col == 2) << "cell " << c;
  }
}

TEST(ShapeDescriptor, CornerActivatesTwoOrientations) {
  const BinaryMask m = testing::mask_from(96, 96, [](double x, double y) { return x >= 48 && y >= 48; });
  const Keypoint kp{47.5, 47.5, 3.5, 0};
  const ShapeDescriptor sd = extract_shape_descriptor(m, kp);
  // The four central cells surround the corner.
  bool saw_two = false;
  std::set<int> all;
  for (int c : {5, 6, 9, 10}) {
    std::set<int> here;
    for (int b = 0; b < kSiftBins; ++b) {
      if (sd.bin(c, b)) here.insert(b);
    }
    all.insert(here.begin(), here.end());
    if (here.count(0) && here.count(2)) saw_two = true;
  }
  EXPECT_TRUE(saw_two || (all.count(0) && all.count(2)));
  EXPECT_TRUE(all.count(0));
  EXPECT_TRUE(all.count(2));
  // The corner cell itself sees both edges.
  std::set<int> corner;
  for (int b = 0; b < kSiftBins; ++b) {
    if (sd.bin(10, b)) corner.insert(b);
  }
  EXPECT_GE(corner.size(), 2u);
}

// Every empty cell's sign agrees with the side of the boundary its centre lies on.
TEST(ShapeDescriptor, SignCorrectOnEdgesAndCorners) {
  for (const EdgeCase& ec : edge_cases()) {
    const BinaryMask m = testing::mask_from(96, 96, ec.inside);
    for (double scale : {2.0, 3.5, 5.0, 8.0}) {
      for (double off : {0.0, 0.3, -0.45, 0.77, 1.2}) {
        const double w = SiftParams{}.patch_factor * scale / kSiftCells;
        const Keypoint kp{48 + off * w, 48 + 0.7 * off * w, scale, 0};
        const ShapeDescriptor sd = extract_shape_descriptor(m, kp);
        const StrengthGrid g = cell_strengths(sd);
        for (int c = 0; c < kShapeCells; ++c) {
          if (!sd.cell_empty(c)) continue;
          const auto [cx, cy] = cell_centre(kp, c);
          const bool fg = ec.inside(cx, cy);
          EXPECT_TRUE(fg ? g[c] > 0 : g[c] < 0)
              << ec.name << " scale " << scale << " offset " << off << " cell " << c << "\n"
              << render_ascii(sd, g);
        }
      }
    }
  }
}

double distance_to_boundary(const BinaryMask& m, double px, double py) {
  const int x = static_cast<int>(std::lround(px)), y = static_cast<int>(std::lround(py));
  const bool side = m.at(std::clamp(x, 0, m.width() - 1), std::clamp(y, 0, m.height() - 1));
  double best = 1e9;
  for (int v = 0; v < m.height(); ++v) {
    for (int u = 0; u < m.width(); ++u) {
      if (static_cast<bool>(m.at(u, v)) != side) best = std::min(best, std::hypot(u - px, v - py));
    }
  }
  return best;
}

TEST(ShapeDescriptor, OnePixelShiftKeepsDistantSigns) {
  for (const EdgeCase& ec : edge_cases()) {
    const BinaryMask m = testing::mask_from(96, 96, ec.inside);
    for (auto [sx, sy] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{-1, 0}, std::pair{0, -1}}) {
      const auto shifted_inside = [&](double x, double y) { return ec.inside(x - sx, y - sy); };
      const BinaryMask shifted = testing::mask_from(96, 96, shifted_inside);
      const Keypoint kp{47.5, 47.5, 3.5, 0};
      const StrengthGrid a = cell_strengths(extract_shape_descriptor(m, kp));
      const StrengthGrid b = cell_strengths(extract_shape_descriptor(shifted, kp));
      for (int c = 0; c < kShapeCells; ++c) {
        const auto [cx, cy] = cell_centre(kp, c);
        if (distance_to_boundary(m, cx, cy) < cell_width(kp) ||
            distance_to_boundary(shifted, cx, cy) < cell_width(kp)) {
          continue;
        }
        EXPECT_EQ((a[c] > 0) - (a[c] < 0), (b[c] > 0) - (b[c] < 0))
            << ec.name << " shift " << sx << "," << sy << " cell " << c;
      }
    }
  }
}

std::string golden(const std::string& name) {
  return testing::read_file(std::filesystem::path(BSM_GOLDEN_DIR) / name);
}

TEST(RenderAscii, MatchesGoldenFiles) {
  const BinaryMask edge = testing::mask_from(96, 96, [](double x, double) { return x >= 48; });
  const BinaryMask corner = testing::mask_from(96, 96, [](double x, double y) { return x >= 48 && y >= 48; });
  const Keypoint kp{47.5, 47.5, 3.5, 0};
  const ShapeDescriptor e = extract_shape_descriptor(edge, kp);
  const ShapeDescriptor c = extract_shape_descriptor(corner, kp);
  EXPECT_EQ(render_ascii(e, cell_strengths(e)), golden("vertical_edge.txt"));
  EXPECT_EQ(render_ascii(c, cell_strengths(c)), golden("corner.txt"));
}

TEST(RenderPgm, HeaderAndSize) {
  ShapeDescriptor sd;
  sd.bins[3] = 1;
  const std::string pgm = render_pgm(sd, cell_strengths(sd), 10);
  EXPECT_EQ(pgm.rfind("P2\n40 40\n255\n", 0), 0u);
  EXPECT_EQ(std::count(pgm.begin(), pgm.end(), '\n'), 3 + 40);
}

}  // namespace
}  // namespace bsm
