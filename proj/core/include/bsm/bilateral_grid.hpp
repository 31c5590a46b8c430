#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bsm {

/// Approximate Gaussian filtering in a feature space of up to 8 dimensions.
///
/// Features are given pre-divided by their kernel widths, so the filter
/// computes out_i = sum_j exp(-|f_i - f_j|^2 / 2) in_j (the j = i term
/// included). Values are splatted multilinearly onto a dense grid with
/// `oversampling` cells per unit, blurred separably, and sliced back. The
/// oversampling is lowered, never below 1, until the grid fits `max_cells`.
class BilateralGrid {
 public:
  BilateralGrid(std::span<const double> features, int dim, double oversampling = 2.0,
                std::size_t max_cells = std::size_t{1} << 23);

  /// `in` and `out` hold `channels` interleaved values per point.
  void filter(std::span<const double> in, int channels, std::span<double> out) const;

  /// The weight a point receives from itself through splat, blur and slice.
  double self_weight(std::size_t point) const;

  int dim() const { return dim_; }
  std::size_t points() const { return base_.size(); }
  std::size_t cells() const { return cells_; }
  double oversampling() const { return oversampling_; }

 private:
  template <typename F>
  void for_each_corner(std::size_t point, F&& f) const;
  void blur(std::vector<double>& grid, int channels) const;

  int dim_;
  double oversampling_;
  std::vector<int> size_;
  std::vector<std::size_t> stride_;
  std::size_t cells_ = 1;
  std::vector<std::size_t> base_;  ///< lower corner cell of each point
  std::vector<float> frac_;        ///< per point, per dimension fractional offset
  std::vector<double> taps_;
};

}  // namespace bsm
