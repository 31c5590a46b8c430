#include "bsm/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace bsm {

bool SiftDescriptor::is_zero() const {
  return std::all_of(bins.begin(), bins.end(), [](double v) { return v == 0.0; });
}

double SiftDescriptor::norm() const {
  double s = 0;
  for (double v : bins) s += v * v;
  return std::sqrt(s);
}

namespace {

using Plane = std::vector<double>;

struct ScaleLevel {
  double sigma;
  Plane smoothed;  // image at sigma
};

Plane blurred(const Plane& src, int w, int h, double sigma) {
  Plane p = src;
  if (sigma > 0.1) blur_plane(p, w, h, sigma);
  return p;
}

bool is_spatial_max(const Plane& p, int w, int x, int y) {
  const double v = p[static_cast<std::size_t>(y) * w + x];
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if ((dx || dy) && p[static_cast<std::size_t>(y + dy) * w + x + dx] > v) return false;
    }
  }
  return true;
}

// Vertex of the parabola through (-1,a), (0,b), (1,c), clamped to half a pixel.
double parabolic_offset(double a, double b, double c) {
  const double denom = a - 2 * b + c;
  if (std::abs(denom) < 1e-15) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

// Scale-normalized Laplacian magnitude at an integer pixel.
double log_response(const ScaleLevel& lvl, int w, int x, int y) {
  auto at = [&](int xx, int yy) { return lvl.smoothed[static_cast<std::size_t>(yy) * w + xx]; };
  const double lap = at(x + 1, y) + at(x - 1, y) + at(x, y + 1) + at(x, y - 1) - 4 * at(x, y);
  return lvl.sigma * lvl.sigma * std::abs(lap);
}

std::vector<Keypoint> harris_laplace(const Plane& img, int w, int h,
                                     const std::vector<ScaleLevel>& levels,
                                     const DetectorParams& params) {
  // levels[0] is one step below the first Harris level, levels.back() one above the last.
  const int n_levels = static_cast<int>(levels.size()) - 2;
  std::vector<Plane> responses(n_levels);
  double max_response = 0;
  for (int n = 0; n < n_levels; ++n) {
    const double sigma_i = levels[n + 1].sigma;
    const double sigma_d = params.derivation_ratio * sigma_i;
    const Plane smooth = blurred(img, w, h, sigma_d);
    Plane dx, dy;
    gradient_plane(smooth, w, h, dx, dy);
    Plane xx(dx.size()), yy(dx.size()), xy(dx.size());
    const double norm = sigma_d * sigma_d;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      xx[i] = norm * dx[i] * dx[i];
      yy[i] = norm * dy[i] * dy[i];
      xy[i] = norm * dx[i] * dy[i];
    }
    blur_plane(xx, w, h, sigma_i);
    blur_plane(yy, w, h, sigma_i);
    blur_plane(xy, w, h, sigma_i);
    Plane& r = responses[n];
    r.resize(dx.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double det = xx[i] * yy[i] - xy[i] * xy[i];
      const double tr = xx[i] + yy[i];
      r[i] = det - params.harris_k * tr * tr;
      max_response = std::max(max_response, r[i]);
    }
  }
  std::vector<Keypoint> out;
  if (max_response <= 0) return out;
  const double threshold = params.rel_threshold * max_response;
  const int border = 1;
  for (int n = 0; n < n_levels; ++n) {
    const Plane& r = responses[n];
    for (int y = border; y < h - border; ++y) {
      for (int x = border; x < w - border; ++x) {
        const double v = r[static_cast<std::size_t>(y) * w + x];
        if (v <= threshold || !is_spatial_max(r, w, x, y)) continue;
        const double lg = log_response(levels[n + 1], w, x, y);
        if (lg < log_response(levels[n], w, x, y) || lg < log_response(levels[n + 2], w, x, y)) {
          continue;
        }
        auto at = [&](int xx, int yy) { return r[static_cast<std::size_t>(yy) * w + xx]; };
        const double ox = parabolic_offset(at(x - 1, y), v, at(x + 1, y));
        const double oy = parabolic_offset(at(x, y - 1), v, at(x, y + 1));
        out.push_back({x + ox, y + oy, levels[n + 1].sigma, v / max_response});
      }
    }
  }
  return out;
}

std::vector<Keypoint> dog_extrema(int w, int h, const std::vector<ScaleLevel>& levels,
                                  const DetectorParams& params) {
  std::vector<Plane> dog(levels.size() - 1);
  for (std::size_t n = 0; n + 1 < levels.size(); ++n) {
    dog[n].resize(levels[n].smoothed.size());
    for (std::size_t i = 0; i < dog[n].size(); ++i) {
      dog[n][i] = levels[n + 1].smoothed[i] - levels[n].smoothed[i];
    }
  }
  const double edge_limit = (params.edge_ratio + 1) * (params.edge_ratio + 1) / params.edge_ratio;
  std::vector<Keypoint> out;
  double max_abs = 0;
  for (std::size_t n = 1; n + 1 < dog.size(); ++n) {
    const Plane& d = dog[n];
    auto at = [&](const Plane& p, int x, int y) { return p[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 1; y < h - 1; ++y) {
      for (int x = 1; x < w - 1; ++x) {
        const double v = at(d, x, y);
        if (std::abs(v) <= params.dog_threshold) continue;
        bool is_max = true, is_min = true;
        for (int dn = -1; dn <= 1 && (is_max || is_min); ++dn) {
          const Plane& p = dog[n + dn];
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (!dn && !dx && !dy) continue;
              const double u = at(p, x + dx, y + dy);
              if (u > v) is_max = false;
              if (u < v) is_min = false;
            }
          }
        }
        if (!is_max && !is_min) continue;
        const double dxx = at(d, x + 1, y) + at(d, x - 1, y) - 2 * v;
        const double dyy = at(d, x, y + 1) + at(d, x, y - 1) - 2 * v;
        const double dxy =
            0.25 * (at(d, x + 1, y + 1) - at(d, x + 1, y - 1) - at(d, x - 1, y + 1) + at(d, x - 1, y - 1));
        const double det = dxx * dyy - dxy * dxy;
        const double tr = dxx + dyy;
        if (det <= 0 || tr * tr / det >= edge_limit) continue;
        const double ox = parabolic_offset(at(d, x - 1, y), v, at(d, x + 1, y));
        const double oy = parabolic_offset(at(d, x, y - 1), v, at(d, x, y + 1));
        const double scale = std::sqrt(levels[n].sigma * levels[n + 1].sigma);
        out.push_back({x + ox, y + oy, scale, std::abs(v)});
        max_abs = std::max(max_abs, std::abs(v));
      }
    }
  }
  for (Keypoint& kp : out) kp.response /= max_abs;
  return out;
}

}  // namespace

std::vector<Keypoint> detect_harris_laplace(const GrayImage& img, const DetectorParams& params) {
  const int w = img.width(), h = img.height();
  if (w < 32 || h < 32) return {};
  const int n_levels = params.levels_per_octave * params.octaves;
  std::vector<ScaleLevel> levels;
  levels.reserve(n_levels + 2);
  for (int n = -1; n <= n_levels; ++n) {
    const double sigma = params.sigma0 * std::pow(2.0, static_cast<double>(n) / params.levels_per_octave);
    levels.push_back({sigma, blurred(img.data(), w, h, sigma)});
  }

  std::vector<Keypoint> candidates = harris_laplace(img.data(), w, h, levels, params);
  std::vector<Keypoint> dog = dog_extrema(w, h, levels, params);
  candidates.insert(candidates.end(), dog.begin(), dog.end());

  std::stable_sort(candidates.begin(), candidates.end(), [](const Keypoint& a, const Keypoint& b) {
    return std::tie(b.response, a.y, a.x, a.scale) < std::tie(a.response, b.y, b.x, b.scale);
  });

  const double level_step = 1.0 / params.levels_per_octave;
  const double r2 = params.merge_radius * params.merge_radius;
  std::vector<Keypoint> kept;
  for (const Keypoint& kp : candidates) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const Keypoint& k) {
      const double dx = k.x - kp.x, dy = k.y - kp.y;
      return dx * dx + dy * dy <= r2 &&
             std::abs(std::log2(k.scale / kp.scale)) <= level_step * (1 + 1e-9);
    });
    if (duplicate) continue;
    kept.push_back(kp);
    if (params.max_keypoints > 0 && static_cast<int>(kept.size()) >= params.max_keypoints) break;
  }
  return kept;
}

SiftDescriptor compute_sift(const GrayImage& img, const Keypoint& kp, const SiftParams& params) {
  const double window = params.patch_factor * kp.scale;
  const double half = window / 2;
  const double cell = window / kSiftCells;
  const int w = img.width(), h = img.height();
  if (kp.x + half < 0 || kp.y + half < 0 || kp.x - half > w - 1 || kp.y - half > h - 1) {
    throw std::invalid_argument("descriptor window lies outside the image");
  }

  const double reach = half + cell / 2;
  const double sigma_b = std::sqrt(std::max(0.0, 0.25 * kp.scale * kp.scale - 0.25));
  const int margin = static_cast<int>(std::ceil(3 * sigma_b)) + 2;
  const int px0 = static_cast<int>(std::floor(kp.x - reach)) - margin;
  const int py0 = static_cast<int>(std::floor(kp.y - reach)) - margin;
  const int pw = static_cast<int>(std::ceil(kp.x + reach)) + margin - px0 + 1;
  const int ph = static_cast<int>(std::ceil(kp.y + reach)) + margin - py0 + 1;

  std::vector<double> patch(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) patch[static_cast<std::size_t>(y) * pw + x] = img.clamped(px0 + x, py0 + y);
  }
  if (sigma_b > 0.2) blur_plane(patch, pw, ph, sigma_b);
  std::vector<double> gx, gy;
  gradient_plane(patch, pw, ph, gx, gy);

  SiftDescriptor desc;
  const double inv_two_var = 1.0 / (2 * half * half);
  const int ix0 = std::max(0, static_cast<int>(std::ceil(kp.x - reach)));
  const int ix1 = std::min(w - 1, static_cast<int>(std::floor(kp.x + reach)));
  const int iy0 = std::max(0, static_cast<int>(std::ceil(kp.y - reach)));
  const int iy1 = std::min(h - 1, static_cast<int>(std::floor(kp.y + reach)));
  for (int y = iy0; y <= iy1; ++y) {
    for (int x = ix0; x <= ix1; ++x) {
      const double ox = x - kp.x, oy = y - kp.y;
      const double rx = ox / cell + 1.5, ry = oy / cell + 1.5;
      if (rx <= -1 || rx >= kSiftCells || ry <= -1 || ry >= kSiftCells) continue;
      const std::size_t pi = static_cast<std::size_t>(y - py0) * pw + (x - px0);
      const double mag = std::hypot(gx[pi], gy[pi]);
      if (mag == 0) continue;
      const double weight = mag * std::exp(-(ox * ox + oy * oy) * inv_two_var);
      double ori = std::atan2(gy[pi], gx[pi]) * (4.0 / std::numbers::pi);
      if (ori < 0) ori += kSiftBins;
      const int c0 = static_cast<int>(std::floor(rx)), r0 = static_cast<int>(std::floor(ry));
      int o0 = static_cast<int>(std::floor(ori));
      const double fc = rx - c0, fr = ry - r0, fo = ori - o0;
      o0 %= kSiftBins;
      for (int dr = 0; dr <= 1; ++dr) {
        const int r = r0 + dr;
        if (r < 0 || r >= kSiftCells) continue;
        const double wr = dr ? fr : 1 - fr;
        for (int dc = 0; dc <= 1; ++dc) {
          const int c = c0 + dc;
          if (c < 0 || c >= kSiftCells) continue;
          const double wc = dc ? fc : 1 - fc;
          const int base = (r * kSiftCells + c) * kSiftBins;
          desc[base + o0] += weight * wr * wc * (1 - fo);
          desc[base + (o0 + 1) % kSiftBins] += weight * wr * wc * fo;
        }
      }
    }
  }

  double n = desc.norm();
  if (n < 1e-12) return SiftDescriptor{};
  for (double& v : desc.bins) v = std::min(v / n, params.clamp);
  n = desc.norm();
  for (double& v : desc.bins) v /= n;
  return desc;
}

std::vector<Keypoint> dense_sample(const Rect& roi, double stride, std::span<const double> scales) {
  if (!(roi.width() > 0) || !(roi.height() > 0)) {
    throw std::invalid_argument("dense_sample requires a non-empty ROI");
  }
  if (!(stride >= 1)) throw std::invalid_argument("dense_sample requires stride >= 1");
  if (scales.empty()) throw std::invalid_argument("dense_sample requires at least one scale");
  const int nx = std::max(1, static_cast<int>(std::ceil(roi.width() / stride - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(roi.height() / stride - 1e-9)));
  const double ox = roi.x0 + (roi.width() - (nx - 1) * stride) / 2;
  const double oy = roi.y0 + (roi.height() - (ny - 1) * stride) / 2;
  std::vector<Keypoint> out;
  out.reserve(static_cast<std::size_t>(nx) * ny * scales.size());
  for (double s : scales) {
    if (!(s > 0)) throw std::invalid_argument("dense_sample scales must be positive");
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) out.push_back({ox + i * stride, oy + j * stride, s, 0.0});
    }
  }
  return out;
}

}  // namespace bsm
