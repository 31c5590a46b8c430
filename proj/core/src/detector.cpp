#include "bsm/detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace bsm {

void DetectionParams::validate() const {
  if (!(bandwidth_factor > 0)) throw std::invalid_argument("bandwidth_factor must be positive");
  if (!(log_scale_bandwidth > 0)) throw std::invalid_argument("log_scale_bandwidth must be positive");
  if (!(min_score_ratio >= 0 && min_score_ratio <= 1)) {
    throw std::invalid_argument("min_score_ratio must lie in [0,1]");
  }
  if (!(refine_stride >= 1)) throw std::invalid_argument("refine_stride must be >= 1");
  if (refine_scales.empty()) throw std::invalid_argument("refine_scales must not be empty");
  for (double s : refine_scales) {
    if (!(s > 0)) throw std::invalid_argument("refine_scales must be positive");
  }
  if (!(refine_radius > 0)) throw std::invalid_argument("refine_radius must be positive");
  if (max_hypotheses < 1) throw std::invalid_argument("max_hypotheses must be >= 1");
}

std::vector<Feature> extract_features(const GrayImage& img, const ModelParams& params) {
  std::vector<Feature> out;
  int id = 0;
  for (const Keypoint& kp : detect_harris_laplace(img, params.detector)) {
    SiftDescriptor d = compute_sift(img, kp, params.sift);
    if (d.is_zero()) continue;
    out.push_back({id++, kp, d});
  }
  return out;
}

std::vector<Match> match_features(std::span<const Feature> features, const Model& model) {
  std::vector<Match> out;
  for (const Feature& f : features) {
    for (std::size_t c = 0; c < model.codewords.size(); ++c) {
      const double sim = similarity(f.desc, model.codewords[c].center);
      if (sim >= model.params.t) out.push_back({f.id, f.kp, static_cast<int>(c), sim});
    }
  }
  return out;
}

std::vector<Vote> cast_votes(std::span<const Match> matches, const Model& model) {
  std::unordered_map<int, int> matched_codewords;
  for (const Match& m : matches) ++matched_codewords[m.feature_id];
  std::vector<Vote> out;
  for (const Match& m : matches) {
    const Codeword& cw = model.codewords.at(m.codeword_id);
    const double weight =
        1.0 / (static_cast<double>(matched_codewords[m.feature_id]) * cw.occurrences.size());
    for (std::size_t o = 0; o < cw.occurrences.size(); ++o) {
      const Occurrence& occ = cw.occurrences[o];
      const double s = m.kp.scale / occ.feat_scale;
      Vote v;
      v.cx = m.kp.x - occ.dx * s;
      v.cy = m.kp.y - occ.dy * s;
      v.s = s;
      v.weight = weight;
      v.feature_id = m.feature_id;
      v.codeword_id = m.codeword_id;
      v.occurrence_id = static_cast<int>(o);
      v.anchor = m.kp;
      out.push_back(v);
    }
  }
  return out;
}

namespace {

struct Point3 {
  double x, y, ls;
};

double normalized_dist2(const Vote& v, const Point3& m, const ModeSearchParams& p) {
  const double hs = p.bandwidth * std::exp(m.ls);
  const double dx = v.cx - m.x, dy = v.cy - m.y, dl = std::log(v.s) - m.ls;
  return (dx * dx + dy * dy) / (hs * hs) + dl * dl / (p.log_scale_bandwidth * p.log_scale_bandwidth);
}

constexpr double kKernelCutoff2 = 25.0;

// One mean-shift run from `start`; returns the converged location.
Point3 climb(std::span<const Vote> votes, Point3 m, const ModeSearchParams& p) {
  for (int it = 0; it < p.max_iterations; ++it) {
    double sw = 0, sx = 0, sy = 0, sl = 0;
    for (const Vote& v : votes) {
      const double d2 = normalized_dist2(v, m, p);
      if (d2 > kKernelCutoff2) continue;
      const double k = v.weight * std::exp(-0.5 * d2);
      sw += k;
      sx += k * v.cx;
      sy += k * v.cy;
      sl += k * std::log(v.s);
    }
    if (sw <= 0) break;
    const Point3 next{sx / sw, sy / sw, sl / sw};
    const double hs = p.bandwidth * std::exp(m.ls);
    const double shift2 = ((next.x - m.x) * (next.x - m.x) + (next.y - m.y) * (next.y - m.y)) / (hs * hs) +
                          (next.ls - m.ls) * (next.ls - m.ls) /
                              (p.log_scale_bandwidth * p.log_scale_bandwidth);
    m = next;
    if (shift2 < 1e-12) break;
  }
  return m;
}

}  // namespace

double kernel_mass(std::span<const Vote> votes, double cx, double cy, double s,
                   const ModeSearchParams& params) {
  const Point3 m{cx, cy, std::log(s)};
  double mass = 0;
  for (const Vote& v : votes) {
    const double d2 = normalized_dist2(v, m, params);
    if (d2 <= kKernelCutoff2) mass += v.weight * std::exp(-0.5 * d2);
  }
  return mass;
}

std::vector<Hypothesis> estimate_modes(std::span<const Vote> votes, const ModeSearchParams& p) {
  if (votes.empty()) return {};
  if (!(p.bandwidth > 0)) throw std::invalid_argument("mean-shift bandwidth must be positive");

  // Seeds: weighted means of votes binned at kernel resolution.
  std::map<std::tuple<long, long, long>, std::array<double, 4>> bins;
  for (const Vote& v : votes) {
    const double hs = p.bandwidth * v.s;
    const auto key = std::make_tuple(std::lround(std::floor(v.cx / hs)), std::lround(std::floor(v.cy / hs)),
                                     std::lround(std::floor(std::log(v.s) / p.log_scale_bandwidth)));
    auto& acc = bins[key];
    acc[0] += v.weight;
    acc[1] += v.weight * v.cx;
    acc[2] += v.weight * v.cy;
    acc[3] += v.weight * std::log(v.s);
  }

  struct Mode {
    Point3 at;
    double score;
  };
  std::vector<Mode> modes;
  for (const auto& [key, acc] : bins) {
    const Point3 seed{acc[1] / acc[0], acc[2] / acc[0], acc[3] / acc[0]};
    const Point3 m = climb(votes, seed, p);
    modes.push_back({m, kernel_mass(votes, m.x, m.y, std::exp(m.ls), p)});
  }
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    return std::tie(b.score, a.at.y, a.at.x) < std::tie(a.score, b.at.y, b.at.x);
  });

  std::vector<Mode> unique;
  for (const Mode& m : modes) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const Mode& u) {
      const double hs = p.bandwidth * std::exp(u.at.ls);
      const double d2 = ((m.at.x - u.at.x) * (m.at.x - u.at.x) + (m.at.y - u.at.y) * (m.at.y - u.at.y)) /
                            (hs * hs) +
                        (m.at.ls - u.at.ls) * (m.at.ls - u.at.ls) /
                            (p.log_scale_bandwidth * p.log_scale_bandwidth);
      return d2 < p.dedupe_radius * p.dedupe_radius;
    });
    if (!dup) unique.push_back(m);
  }

  std::vector<Hypothesis> out;
  for (const Mode& m : unique) {
    Hypothesis h;
    h.cx = m.at.x;
    h.cy = m.at.y;
    h.s = std::exp(m.at.ls);
    h.roi = Rect::centered(h.cx, h.cy, p.object_w * h.s, p.object_h * h.s);
    const bool suppressed = std::any_of(out.begin(), out.end(), [&](const Hypothesis& k) {
      return rect_iou(k.roi, h.roi) > p.nms_iou;
    });
    if (suppressed) continue;
    for (const Vote& v : votes) {
      if (normalized_dist2(v, m.at, p) <= p.contributor_radius * p.contributor_radius) {
        h.contributors.push_back(v);
      }
    }
    h.score = m.score;
    if (h.score <= 0) continue;
    out.push_back(std::move(h));
  }
  if (!out.empty()) {
    const double cut = p.min_score_ratio * out.front().score;
    std::erase_if(out, [&](const Hypothesis& h) { return h.score < cut; });
  }
  return out;
}

ModeSearchParams mode_search_params(const Model& model, const DetectionParams& params) {
  ModeSearchParams p;
  p.bandwidth = params.bandwidth_factor * model.mean_object_diagonal();
  p.log_scale_bandwidth = params.log_scale_bandwidth;
  p.object_w = model.mean_object_w;
  p.object_h = model.mean_object_h;
  p.nms_iou = params.nms_iou;
  p.min_score_ratio = params.min_score_ratio;
  return p;
}

Hypothesis refine_hypothesis(const Hypothesis& h, const GrayImage& img, const Model& model,
                             const DetectionParams& params, int feature_id_base) {
  Hypothesis out = h;
  out.refined = true;
  const Rect image_rect{-0.5, -0.5, img.width() - 0.5, img.height() - 0.5};
  const Rect clipped{std::max(h.roi.x0, image_rect.x0), std::max(h.roi.y0, image_rect.y0),
                     std::min(h.roi.x1, image_rect.x1), std::min(h.roi.y1, image_rect.y1)};
  if (clipped.area() <= 0) {
    out.outside_image = true;
    return out;
  }
  std::vector<double> scales;
  for (double f : params.refine_scales) scales.push_back(f * model.mean_feature_scale * h.s);
  std::vector<Feature> features;
  int id = feature_id_base;
  for (const Keypoint& kp : dense_sample(clipped, params.refine_stride, scales)) {
    SiftDescriptor d = compute_sift(img, kp, model.params.sift);
    if (d.is_zero()) continue;
    features.push_back({id++, kp, d});
  }
  const std::vector<Match> matches = match_features(features, model);
  const std::vector<Vote> votes = cast_votes(matches, model);
  const double radius = params.refine_radius * h.roi.diagonal();
  for (const Vote& v : votes) {
    if (std::hypot(v.cx - h.cx, v.cy - h.cy) <= radius) out.contributors.push_back(v);
  }
  double added = 0;
  for (std::size_t i = h.contributors.size(); i < out.contributors.size(); ++i) {
    added += out.contributors[i].weight;
  }
  out.score = h.score + added;
  return out;
}

std::vector<Hypothesis> detect(const GrayImage& img, const Model& model, const DetectionParams& params) {
  params.validate();
  if (model.codewords.empty()) return {};
  const std::vector<Feature> features = extract_features(img, model.params);
  const std::vector<Match> matches = match_features(features, model);
  const std::vector<Vote> votes = cast_votes(matches, model);
  std::vector<Hypothesis> hyps = estimate_modes(votes, mode_search_params(model, params));
  std::erase_if(hyps, [&](const Hypothesis& h) {
    return h.cx < 0 || h.cy < 0 || h.cx > img.width() - 1 || h.cy > img.height() - 1;
  });
  if (static_cast<int>(hyps.size()) > params.max_hypotheses) hyps.resize(params.max_hypotheses);
  if (params.refine) {
    for (Hypothesis& h : hyps) h = refine_hypothesis(h, img, model, params);
  }
  return hyps;
}

}  // namespace bsm
