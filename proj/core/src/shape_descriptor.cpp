#include "bsm/shape_descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bsm {

bool ShapeDescriptor::cell_empty(int cell) const {
  for (int b = 0; b < kSiftBins; ++b) {
    if (bin(cell, b)) return false;
  }
  return true;
}

bool ShapeDescriptor::is_empty() const {
  return std::all_of(bins.begin(), bins.end(), [](std::uint8_t v) { return v == 0; });
}

int ShapeDescriptor::active_count() const {
  return static_cast<int>(std::count(bins.begin(), bins.end(), std::uint8_t{1}));
}

StrengthGrid& StrengthGrid::operator+=(const StrengthGrid& o) {
  for (int i = 0; i < kShapeCells; ++i) upsilon[i] += o.upsilon[i];
  return *this;
}

StrengthGrid StrengthGrid::operator*(double s) const {
  StrengthGrid out = *this;
  for (double& v : out.upsilon) v *= s;
  return out;
}

ShapeDescriptor quantize(const SiftDescriptor& d, double beta) {
  if (!(beta > 0 && beta < 1)) throw std::invalid_argument("beta must lie in (0,1)");
  const double m = beta * *std::max_element(d.bins.begin(), d.bins.end());
  ShapeDescriptor sd;
  for (int i = 0; i < kSiftLength; ++i) sd.bins[i] = d.bins[i] > m ? 1 : 0;
  return sd;
}

namespace {

std::optional<int> neighbor_cell(int cell, int j) {
  const int col = cell % kSiftCells + kNeighborOffsets[j][0];
  const int row = cell / kSiftCells + kNeighborOffsets[j][1];
  if (col < 0 || row < 0 || col >= kSiftCells || row >= kSiftCells) return std::nullopt;
  return row * kSiftCells + col;
}

struct Evaluation {
  StrengthGrid grid;
  int passes = 0;
};

Evaluation evaluate(const ShapeDescriptor& sd) {
  Evaluation ev;
  if (sd.is_empty()) return ev;

  std::array<bool, kShapeCells> assigned{};
  for (int i = 0; i < kShapeCells; ++i) {
    if (!sd.cell_empty(i)) {
      assigned[i] = true;  // boundary cell, strength 0
      continue;
    }
    bool has_boundary_neighbor = false;
    double v = 0;
    for (int j = 0; j < 8; ++j) {
      const auto n = neighbor_cell(i, j);
      if (!n || sd.cell_empty(*n)) continue;
      has_boundary_neighbor = true;
      v += sd.bin(*n, (j + 4) % 8) - sd.bin(*n, j);
    }
    // An empty cell next to a boundary whose bins carry no directional evidence
    // toward it is left for propagation.
    if (has_boundary_neighbor && v != 0) {
      ev.grid[i] = v;
      assigned[i] = true;
    }
  }

  // Propagate into cells surrounded by empty cells, one ring per pass, each
  // pass reading only values assigned by earlier passes.
  while (std::find(assigned.begin(), assigned.end(), false) != assigned.end()) {
    ++ev.passes;
    std::array<bool, kShapeCells> next = assigned;
    StrengthGrid values = ev.grid;
    for (int i = 0; i < kShapeCells; ++i) {
      if (assigned[i]) continue;
      double hi = -INFINITY, lo = INFINITY;
      for (int j = 0; j < 8; ++j) {
        const auto n = neighbor_cell(i, j);
        if (!n || !assigned[*n]) continue;
        hi = std::max(hi, ev.grid[*n]);
        lo = std::min(lo, ev.grid[*n]);
      }
      if (hi == -INFINITY) continue;
      values[i] = hi + lo;
      next[i] = true;
    }
    ev.grid = values;
    assigned = next;
  }
  return ev;
}

}  // namespace

StrengthGrid cell_strengths(const ShapeDescriptor& sd) { return evaluate(sd).grid; }

int propagation_passes(const ShapeDescriptor& sd) { return evaluate(sd).passes; }

ShapeDescriptor extract_shape_descriptor(const BinaryMask& mask, const Keypoint& kp, double beta,
                                         const SiftParams& params) {
  return quantize(compute_sift(mask_to_gray(mask), kp, params), beta);
}

std::string render_ascii(const ShapeDescriptor& sd, const StrengthGrid& strengths) {
  std::ostringstream os;
  for (int row = 0; row < kSiftCells; ++row) {
    for (int col = 0; col < kSiftCells; ++col) {
      const int cell = row * kSiftCells + col;
      std::string bins;
      for (int b = 0; b < kSiftBins; ++b) {
        if (sd.bin(cell, b)) bins += static_cast<char>('0' + b);
      }
      os << '[' << std::setw(8) << std::left << (bins.empty() ? "." : bins) << ']';
    }
    os << "   ";
    for (int col = 0; col < kSiftCells; ++col) {
      os << std::setw(6) << std::right << std::showpos << std::fixed << std::setprecision(1)
         << strengths[row * kSiftCells + col] << std::noshowpos;
    }
    os << '\n';
  }
  return os.str();
}

std::string render_pgm(const ShapeDescriptor& sd, const StrengthGrid& strengths, int cell_px) {
  const int side = cell_px * kSiftCells;
  std::vector<int> px(static_cast<std::size_t>(side) * side, 128);
  double max_abs = 0;
  for (double v : strengths.upsilon) max_abs = std::max(max_abs, std::abs(v));
  for (int cell = 0; cell < kShapeCells; ++cell) {
    const int cx0 = (cell % kSiftCells) * cell_px, cy0 = (cell / kSiftCells) * cell_px;
    const int shade = max_abs > 0 ? 128 + static_cast<int>(std::lround(100 * strengths[cell] / max_abs)) : 128;
    for (int y = 0; y < cell_px; ++y) {
      for (int x = 0; x < cell_px; ++x) {
        const bool edge = x == 0 || y == 0;
        px[static_cast<std::size_t>(cy0 + y) * side + cx0 + x] = edge ? 0 : shade;
      }
    }
    const double c = (cell_px - 1) / 2.0;
    for (int b = 0; b < kSiftBins; ++b) {
      if (!sd.bin(cell, b)) continue;
      const double a = b * std::numbers::pi / 4;
      for (double t = 0; t <= c - 1; t += 0.25) {
        const int x = cx0 + static_cast<int>(std::lround(c + t * std::cos(a)));
        const int y = cy0 + static_cast<int>(std::lround(c + t * std::sin(a)));
        px[static_cast<std::size_t>(y) * side + x] = 255;
      }
    }
  }
  std::ostringstream os;
  os << "P2\n" << side << ' ' << side << "\n255\n";
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) os << px[static_cast<std::size_t>(y) * side + x] << (x + 1 < side ? ' ' : '\n');
  }
  return os.str();
}

}  // namespace bsm
