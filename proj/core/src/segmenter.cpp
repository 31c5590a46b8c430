#include "bsm/segmenter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace bsm {

std::vector<ConsolidatedStrength> consolidate(const Hypothesis& h, const Model& model) {
  std::map<std::pair<int, int>, ConsolidatedStrength> groups;
  for (const Vote& v : h.contributors) {
    const Codeword& cw = model.codewords.at(v.codeword_id);
    const Occurrence& occ = cw.occurrences.at(v.occurrence_id);
    const ShapeEntry& entry = cw.shape_codebook.at(occ.shape_idx);
    auto [it, fresh] = groups.try_emplace({v.feature_id, v.codeword_id});
    if (fresh) {
      it->second.codeword_id = v.codeword_id;
      it->second.feature_id = v.feature_id;
      it->second.anchor = v.anchor;
    }
    it->second.grid += entry.strengths * v.weight;
  }
  std::vector<ConsolidatedStrength> out;
  out.reserve(groups.size());
  for (auto& [key, cs] : groups) out.push_back(std::move(cs));
  return out;
}

ScalarField splat_likelihood(std::span<const ConsolidatedStrength> strengths, int width, int height,
                             int base_size, double mean_feature_scale) {
  if (base_size < 1 || base_size % 2 == 0) throw std::invalid_argument("base_size must be odd");
  if (!(mean_feature_scale > 0)) throw std::invalid_argument("mean_feature_scale must be positive");
  ScalarField field(width, height, 0.0);
  for (const ConsolidatedStrength& cs : strengths) {
    const double side = base_size * cs.anchor.scale / mean_feature_scale;
    if (!(side > 0)) continue;
    const double x0 = cs.anchor.x - side / 2, y0 = cs.anchor.y - side / 2;
    const int px0 = std::max(0, static_cast<int>(std::ceil(x0)));
    const int py0 = std::max(0, static_cast<int>(std::ceil(y0)));
    const int px1 = std::min(width - 1, static_cast<int>(std::ceil(x0 + side)) - 1);
    const int py1 = std::min(height - 1, static_cast<int>(std::ceil(y0 + side)) - 1);
    const double cell = side / kSiftCells;
    for (int py = py0; py <= py1; ++py) {
      // Cell centres sit at (k + 0.5) * cell; clamp to the outer centres.
      const double v = std::clamp((py - y0) / cell - 0.5, 0.0, kSiftCells - 1.0);
      const int r0 = std::min(static_cast<int>(v), kSiftCells - 2);
      const double fy = v - r0;
      for (int px = px0; px <= px1; ++px) {
        const double u = std::clamp((px - x0) / cell - 0.5, 0.0, kSiftCells - 1.0);
        const int c0 = std::min(static_cast<int>(u), kSiftCells - 2);
        const double fx = u - c0;
        const auto g = [&](int r, int c) { return cs.grid[r * kSiftCells + c]; };
        field.at(px, py) += (1 - fy) * ((1 - fx) * g(r0, c0) + fx * g(r0, c0 + 1)) +
                            fy * ((1 - fx) * g(r0 + 1, c0) + fx * g(r0 + 1, c0 + 1));
      }
    }
  }
  return field;
}

namespace {

// Gaussian KDE over RGB evaluated on a binned grid: seeds are splatted
// linearly into bins of kBinWidth color units, the histogram is blurred with
// the kernel and looked up trilinearly.
class ColorDensity {
 public:
  static constexpr int kBinWidth = 4;
  static constexpr int kBins = 255 / kBinWidth + 2;

  ColorDensity(const RgbImage& img, const std::vector<std::size_t>& seeds, double bandwidth)
      : grid_(static_cast<std::size_t>(kBins) * kBins * kBins, 0.0) {
    const double w = 1.0 / static_cast<double>(seeds.size());
    for (std::size_t i : seeds) {
      corners(img, i, [&](std::size_t idx, double cw) { grid_[idx] += w * cw; });
    }
    const double sigma = bandwidth / kBinWidth;
    const int radius = static_cast<int>(std::ceil(4 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0;
    for (int t = -radius; t <= radius; ++t) sum += taps[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    for (double& t : taps) t /= sum;
    const std::array<std::size_t, 3> stride{1, kBins, static_cast<std::size_t>(kBins) * kBins};
    std::vector<double> line(kBins);
    for (int axis = 0; axis < 3; ++axis) {
      const std::size_t st = stride[axis];
      for (std::size_t start = 0; start < grid_.size(); ++start) {
        if ((start / st) % kBins != 0) continue;
        for (int p = 0; p < kBins; ++p) line[p] = grid_[start + p * st];
        for (int p = 0; p < kBins; ++p) {
          double acc = 0;
          for (int t = std::max(-radius, -p); t <= std::min(radius, kBins - 1 - p); ++t) {
            acc += taps[t + radius] * line[p + t];
          }
          grid_[start + p * st] = acc;
        }
      }
    }
  }

  double operator()(const RgbImage& img, std::size_t i) const {
    double p = 0;
    corners(img, i, [&](std::size_t idx, double cw) { p += cw * grid_[idx]; });
    return p;
  }

 private:
  template <typename F>
  static void corners(const RgbImage& img, std::size_t i, F&& f) {
    std::array<int, 3> b{};
    std::array<double, 3> fr{};
    for (int c = 0; c < 3; ++c) {
      const double u = img.data()[3 * i + c] / static_cast<double>(kBinWidth);
      b[c] = static_cast<int>(u);
      fr[c] = u - b[c];
    }
    for (int k = 0; k < 8; ++k) {
      double w = 1;
      std::size_t idx = 0, mul = 1;
      for (int c = 0; c < 3; ++c) {
        const int bit = (k >> c) & 1;
        w *= bit ? fr[c] : 1 - fr[c];
        idx += (b[c] + bit) * mul;
        mul *= kBins;
      }
      if (w > 0) f(idx, w);
    }
  }

  std::vector<double> grid_;
};

}  // namespace

UnaryField build_unary(const ScalarField& likelihood, const RgbImage& img, const Hypothesis& h,
                       const CrfParams& params, std::vector<std::string>* warnings) {
  params.validate();
  const int w = img.width(), ht = img.height();
  if (likelihood.width() != w || likelihood.height() != ht) {
    throw std::invalid_argument("likelihood field does not match the image size");
  }
  const std::size_t n = img.pixel_count();

  double peak = 0;
  for (double v : likelihood.data()) peak = std::max(peak, std::abs(v));
  std::vector<double> un(n, 0.0);
  if (peak > 0) {
    for (std::size_t i = 0; i < n; ++i) un[i] = likelihood.data()[i] / peak;
  }

  UnaryField u;
  u.lambda_shape = params.lambda_shape;
  u.lambda_color = params.lambda_color;
  u.lambda_roi = params.lambda_roi;
  std::vector<double> shape_fg(n), shape_bg(n), color_fg(n, 0.0), color_bg(n, 0.0), roi_fg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    shape_fg[i] = -un[i];
    shape_bg[i] = un[i];
  }

  const Rect roi_fg_rect = h.roi.scaled(params.roi_fg_factor);
  const Rect bg_rect = h.roi.scaled(params.bg_outside_factor);
  std::vector<std::size_t> fg_seeds, bg_seeds;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i % w), y = static_cast<double>(i / w);
    if (!roi_fg_rect.contains(x, y)) roi_fg[i] = params.roi_penalty;
    if (un[i] > params.seed_threshold) {
      fg_seeds.push_back(i);
    } else if (un[i] < -params.seed_threshold || !bg_rect.contains(x, y)) {
      bg_seeds.push_back(i);
    }
  }

  const auto min_seeds = static_cast<std::size_t>(params.min_seed_pixels);
  if (fg_seeds.size() < min_seeds || bg_seeds.size() < min_seeds) {
    u.uniform_color = true;
    if (warnings) {
      warnings->push_back("too few color seeds (fg " + std::to_string(fg_seeds.size()) + ", bg " +
                          std::to_string(bg_seeds.size()) + "); color term disabled");
    }
  } else {
    constexpr double kEps = 1e-8;
    const ColorDensity pf(img, fg_seeds, params.kde_bandwidth);
    const ColorDensity pb(img, bg_seeds, params.kde_bandwidth);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = pf(img, i), b = pb(img, i);
      const double total = a + b;
      const double nf = total > 0 ? a / total : 0.5;
      color_fg[i] = -std::log(nf + kEps);
      color_bg[i] = -std::log(1 - nf + kEps);
    }
  }

  std::vector<double> e_fg(n), e_bg(n);
  for (std::size_t i = 0; i < n; ++i) {
    e_fg[i] = params.lambda_shape * shape_fg[i] + params.lambda_color * color_fg[i] + params.lambda_roi * roi_fg[i];
    e_bg[i] = params.lambda_shape * shape_bg[i] + params.lambda_color * color_bg[i];
  }
  u.energy = {ScalarField(w, ht, std::move(e_fg)), ScalarField(w, ht, std::move(e_bg))};
  u.shape = {ScalarField(w, ht, std::move(shape_fg)), ScalarField(w, ht, std::move(shape_bg))};
  u.color = {ScalarField(w, ht, std::move(color_fg)), ScalarField(w, ht, std::move(color_bg))};
  u.roi = {ScalarField(w, ht, std::move(roi_fg)), ScalarField(w, ht, 0.0)};
  return u;
}

BinaryMask argmax_mask(const MarginalField& q) {
  BinaryMask mask(q.width(), q.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = q.q.data()[i] > 0.5 ? 1 : 0;
  return mask;
}

Segmentation segment_detailed(const RgbImage& img, const Hypothesis& h, const Model& model,
                              const CrfParams& params, InferenceMode mode) {
  params.validate();
  const int w = img.width(), ht = img.height();
  Segmentation out;
  if (h.contributors.empty()) {
    out.warnings.push_back("hypothesis has no contributing votes; mask left empty");
    out.mask = BinaryMask(w, ht, 0);
    out.likelihood = ScalarField(w, ht, 0.0);
    out.unary = UnaryField::from_energies(ScalarField(w, ht, 0.0), ScalarField(w, ht, 0.0));
    out.marginals = {ScalarField(w, ht, 0.0)};
    return out;
  }
  const std::vector<ConsolidatedStrength> strengths = consolidate(h, model);
  out.likelihood = splat_likelihood(strengths, w, ht, model.params.base_size, model.mean_feature_scale);
  out.unary = build_unary(out.likelihood, img, h, params, &out.warnings);
  out.marginals = meanfield_infer(out.unary, img, params, mode);
  out.mask = argmax_mask(out.marginals);
  return out;
}

BinaryMask segment(const RgbImage& img, const Hypothesis& h, const Model& model, const CrfParams& params,
                   std::vector<std::string>* warnings) {
  Segmentation s = segment_detailed(img, h, model, params);
  if (warnings) warnings->insert(warnings->end(), s.warnings.begin(), s.warnings.end());
  return std::move(s.mask);
}

BinaryMask segment_all(const RgbImage& img, std::span<const Hypothesis> hyps, const Model& model,
                       const CrfParams& params, std::vector<std::string>* warnings) {
  BinaryMask merged(img.width(), img.height(), 0);
  for (const Hypothesis& h : hyps) {
    const BinaryMask m = segment(img, h, model, params, warnings);
    for (std::size_t i = 0; i < merged.size(); ++i) merged.data()[i] |= m.data()[i];
  }
  return merged;
}

RgbImage likelihood_heatmap(const ScalarField& field) {
  double peak = 0;
  for (double v : field.data()) peak = std::max(peak, std::abs(v));
  RgbImage out(field.width(), field.height());
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      const double v = peak > 0 ? field.at(x, y) / peak : 0.0;
      const auto level = static_cast<std::uint8_t>(std::lround(255 * std::abs(v)));
      out.at(x, y, 0) = v < 0 ? level : 0;
      out.at(x, y, 1) = v > 0 ? level : 0;
      out.at(x, y, 2) = 0;
    }
  }
  return out;
}

RgbImage likelihood_overlay(const RgbImage& img, const ScalarField& field, double opacity) {
  if (img.width() != field.width() || img.height() != field.height()) {
    throw std::invalid_argument("overlay field does not match the image size");
  }
  if (!(opacity >= 0 && opacity <= 1)) throw std::invalid_argument("opacity must lie in [0,1]");
  const RgbImage heat = likelihood_heatmap(field);
  RgbImage out(img.width(), img.height());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = static_cast<std::uint8_t>(
        std::lround((1 - opacity) * img.data()[i] + opacity * heat.data()[i]));
  }
  return out;
}

}  // namespace bsm
