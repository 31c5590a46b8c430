#include "bsm/bilateral_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bsm {

BilateralGrid::BilateralGrid(std::span<const double> features, int dim, double oversampling,
                             std::size_t max_cells)
    : dim_(dim), oversampling_(oversampling) {
  if (dim < 1 || dim > 8) throw std::invalid_argument("grid dimension must lie in [1,8]");
  if (!(oversampling >= 1)) throw std::invalid_argument("grid oversampling must be >= 1");
  if (features.empty() || features.size() % dim != 0) {
    throw std::invalid_argument("feature buffer size must be a positive multiple of dim");
  }
  const std::size_t n = features.size() / dim;
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) {
      const double v = features[i * dim + k];
      if (!std::isfinite(v)) throw std::invalid_argument("features must be finite");
      lo[k] = std::min(lo[k], v);
      hi[k] = std::max(hi[k], v);
    }
  }

  auto layout = [&](double s) {
    size_.assign(dim, 0);
    stride_.assign(dim, 0);
    double total = 1;
    cells_ = 1;
    for (int k = dim - 1; k >= 0; --k) {
      size_[k] = static_cast<int>(std::floor((hi[k] - lo[k]) * s)) + 2;
      stride_[k] = cells_;
      cells_ *= size_[k];
      total *= size_[k];
    }
    return total;
  };
  while (layout(oversampling_) > static_cast<double>(max_cells) && oversampling_ > 1) {
    oversampling_ = std::max(1.0, oversampling_ * 0.9);
  }
  if (layout(oversampling_) > static_cast<double>(max_cells)) {
    throw std::invalid_argument("feature range too large for the grid cell budget");
  }

  base_.resize(n);
  frac_.resize(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = 0;
    for (int k = 0; k < dim; ++k) {
      const double u = (features[i * dim + k] - lo[k]) * oversampling_;
      int b = static_cast<int>(std::floor(u));
      double f = u - b;
      if (b >= size_[k] - 1) {
        b = size_[k] - 2;
        f = 1;
      }
      idx += static_cast<std::size_t>(b) * stride_[k];
      frac_[i * dim + k] = static_cast<float>(f);
    }
    base_[i] = idx;
  }

  // Splat and slice each act as a unit-width hat filter, adding variance 1/6
  // apiece in cell units; the blur supplies the rest of s^2.
  const double s = oversampling_;
  const double sigma = std::sqrt(s * s - 1.0 / 3.0);
  const int radius = static_cast<int>(std::ceil(3.5 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0;
  for (int q = -radius; q <= radius; ++q) {
    taps[q + radius] = std::exp(-0.5 * q * q / (sigma * sigma));
    sum += taps[q + radius];
  }
  // An unnormalized unit Gaussian integrates to sqrt(2 pi) units, which is
  // sqrt(2 pi) * s cells, per dimension.
  const double gain = std::sqrt(2 * std::numbers::pi) * s / sum;
  taps_.resize(taps.size());
  for (std::size_t q = 0; q < taps.size(); ++q) taps_[q] = taps[q] * gain;
}

template <typename F>
void BilateralGrid::for_each_corner(std::size_t point, F&& f) const {
  const float* fr = &frac_[point * dim_];
  for (unsigned c = 0; c < (1u << dim_); ++c) {
    double w = 1;
    std::size_t idx = base_[point];
    for (int k = 0; k < dim_; ++k) {
      const double f = fr[k];
      if ((c >> k) & 1u) {
        w *= f;
        idx += stride_[k];
      } else {
        w *= 1 - f;
      }
    }
    if (w > 0) f(idx, w);
  }
}

void BilateralGrid::blur(std::vector<double>& grid, int channels) const {
  const int radius = static_cast<int>(taps_.size() / 2);
  for (int k = 0; k < dim_; ++k) {
    const int len = size_[k];
    const std::size_t step = stride_[k] * channels;
    const std::size_t block = stride_[k] * static_cast<std::size_t>(len);
    std::vector<double> line(static_cast<std::size_t>(len) * channels);
    std::vector<double> result(line.size());
    for (std::size_t outer = 0; outer < cells_; outer += block) {
      for (std::size_t inner = 0; inner < stride_[k]; ++inner) {
        const std::size_t start = (outer + inner) * channels;
        bool any = false;
        for (int p = 0; p < len; ++p) {
          for (int c = 0; c < channels; ++c) {
            const double v = grid[start + p * step + c];
            line[static_cast<std::size_t>(p) * channels + c] = v;
            any = any || v != 0;
          }
        }
        if (!any) continue;
        std::fill(result.begin(), result.end(), 0.0);
        for (int p = 0; p < len; ++p) {
          const int q0 = std::max(-radius, -p), q1 = std::min(radius, len - 1 - p);
          for (int c = 0; c < channels; ++c) {
            const double v = line[static_cast<std::size_t>(p) * channels + c];
            if (v == 0) continue;
            for (int q = q0; q <= q1; ++q) {
              result[static_cast<std::size_t>(p + q) * channels + c] += taps_[q + radius] * v;
            }
          }
        }
        for (int p = 0; p < len; ++p) {
          for (int c = 0; c < channels; ++c) {
            grid[start + p * step + c] = result[static_cast<std::size_t>(p) * channels + c];
          }
        }
      }
    }
  }
}

double BilateralGrid::self_weight(std::size_t point) const {
  const int radius = static_cast<int>(taps_.size() / 2);
  const double t0 = taps_[radius], t1 = taps_.size() > 1 ? taps_[radius + 1] : 0.0;
  double w = 1;
  for (int k = 0; k < dim_; ++k) {
    const double f = frac_[point * dim_ + k];
    w *= ((1 - f) * (1 - f) + f * f) * t0 + 2 * f * (1 - f) * t1;
  }
  return w;
}

void BilateralGrid::filter(std::span<const double> in, int channels, std::span<double> out) const {
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  const std::size_t n = points();
  if (in.size() != n * channels || out.size() != n * channels) {
    throw std::invalid_argument("filter buffers do not match the point count");
  }
  std::vector<double> grid(cells_ * channels, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for_each_corner(i, [&](std::size_t idx, double w) {
      for (int c = 0; c < channels; ++c) grid[idx * channels + c] += w * in[i * channels + c];
    });
  }
  blur(grid, channels);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) out[i * channels + c] = 0;
    for_each_corner(i, [&](std::size_t idx, double w) {
      for (int c = 0; c < channels; ++c) out[i * channels + c] += w * grid[idx * channels + c];
    });
  }
}

}  // namespace bsm
