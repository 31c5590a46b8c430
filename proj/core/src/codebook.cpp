#include "bsm/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace bsm {

void ModelParams::validate() const {
  if (!(t > 0 && t < 1)) throw std::invalid_argument("t must lie in (0,1)");
  if (!(beta > 0 && beta < 1)) throw std::invalid_argument("beta must lie in (0,1)");
  if (base_size < 3 || base_size % 2 == 0) throw std::invalid_argument("base_size must be odd and >= 3");
  if (!(sift.patch_factor > 0)) throw std::invalid_argument("patch_factor must be positive");
  if (!(sift.clamp > 0 && sift.clamp <= 1)) throw std::invalid_argument("sift clamp must lie in (0,1]");
  if (detector.levels_per_octave < 1 || detector.octaves < 1) {
    throw std::invalid_argument("detector needs at least one octave and one level");
  }
  if (!(detector.sigma0 > 0) || !(detector.derivation_ratio > 0) || !(detector.edge_ratio > 1)) {
    throw std::invalid_argument("detector sigma0, derivation_ratio must be positive and edge_ratio > 1");
  }
  if (!(detector.rel_threshold >= 0) || !(detector.dog_threshold >= 0) || !(detector.merge_radius >= 0)) {
    throw std::invalid_argument("detector thresholds and merge_radius must be >= 0");
  }
  if (detector.max_keypoints < 0) throw std::invalid_argument("max_keypoints must be >= 0");
}

std::size_t Model::occurrence_count() const {
  std::size_t n = 0;
  for (const Codeword& cw : codewords) n += cw.occurrences.size();
  return n;
}

double Model::mean_object_diagonal() const { return std::hypot(mean_object_w, mean_object_h); }

double similarity(const SiftDescriptor& a, const SiftDescriptor& b) {
  const bool za = a.is_zero(), zb = b.is_zero();
  if (za || zb) return za && zb ? 1.0 : 0.0;
  double d2 = 0;
  for (int i = 0; i < kSiftLength; ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::clamp(1.0 - std::sqrt(d2) / std::numbers::sqrt2, 0.0, 1.0);
}

SiftDescriptor normalized_mean(std::span<const SiftDescriptor> descs, std::span<const int> members) {
  SiftDescriptor mean;
  for (int m : members) {
    for (int i = 0; i < kSiftLength; ++i) mean[i] += descs[m][i];
  }
  const double n = mean.norm();
  if (n < 1e-12) return SiftDescriptor{};
  for (double& v : mean.bins) v /= n;
  return mean;
}

namespace {

struct Active {
  std::vector<int> members;
  SiftDescriptor sum;
  SiftDescriptor centroid;
  bool alive = true;
};

SiftDescriptor unit(const SiftDescriptor& sum) {
  const double n = sum.norm();
  if (n < 1e-12) return SiftDescriptor{};
  SiftDescriptor out = sum;
  for (double& v : out.bins) v /= n;
  return out;
}

}  // namespace

Clustering agglomerative_cluster(std::span<const SiftDescriptor> descs, double t) {
  if (descs.empty()) throw std::invalid_argument("agglomerative_cluster needs at least one descriptor");
  if (!(t > 0 && t < 1)) throw std::invalid_argument("t must lie in (0,1)");
  const int n = static_cast<int>(descs.size());
  std::vector<Active> cl(n);
  for (int i = 0; i < n; ++i) {
    cl[i].members = {i};
    cl[i].sum = descs[i];
    cl[i].centroid = unit(descs[i]);
  }

  std::vector<int> nn(n, -1);
  std::vector<double> nn_sim(n, -1.0);
  auto find_nn = [&](int i) {
    nn[i] = -1;
    nn_sim[i] = -1.0;
    for (int k = 0; k < n; ++k) {
      if (k == i || !cl[k].alive) continue;
      const double s = similarity(cl[i].centroid, cl[k].centroid);
      if (s > nn_sim[i]) {
        nn_sim[i] = s;
        nn[i] = k;
      }
    }
  };
  for (int i = 0; i < n; ++i) find_nn(i);

  Clustering result;
  while (true) {
    int a = -1;
    for (int i = 0; i < n; ++i) {
      if (!cl[i].alive || nn[i] < 0) continue;
      const int j = nn[i];
      if (nn[j] == i && nn_sim[i] >= t && i < j) {
        a = i;
        break;
      }
    }
    if (a < 0) break;
    const int b = nn[a];
    result.merges.push_back({a, b, nn_sim[a]});

    Active& ka = cl[a];
    Active& kb = cl[b];
    ka.members.insert(ka.members.end(), kb.members.begin(), kb.members.end());
    std::sort(ka.members.begin(), ka.members.end());
    for (int i = 0; i < kSiftLength; ++i) ka.sum[i] += kb.sum[i];
    ka.centroid = unit(ka.sum);
    kb.alive = false;
    kb.members.clear();

    for (int k = 0; k < n; ++k) {
      if (!cl[k].alive || k == a) continue;
      if (nn[k] == a || nn[k] == b) {
        find_nn(k);
        continue;
      }
      const double s = similarity(cl[k].centroid, ka.centroid);
      if (s > nn_sim[k] || (s == nn_sim[k] && a < nn[k])) {
        nn_sim[k] = s;
        nn[k] = a;
      }
    }
    find_nn(a);
  }

  for (int i = 0; i < n; ++i) {
    if (cl[i].alive) result.clusters.push_back({std::move(cl[i].members), cl[i].centroid});
  }
  return result;
}

Rect mask_bbox(const BinaryMask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw DataError("mask has no foreground pixels");
  return {x0 - 0.5, y0 - 0.5, x1 + 0.5, y1 + 0.5};
}

Model build_model(std::span<const TrainingSample> samples, const ModelParams& params,
                  const std::string& class_name, TrainingStats* stats) {
  params.validate();
  if (samples.empty()) throw DataError("no training samples");

  std::vector<SiftDescriptor> appearance;
  std::vector<SiftDescriptor> shape;
  std::vector<Occurrence> occurrences;
  TrainingStats local;
  double sum_w = 0, sum_h = 0;

  for (const TrainingSample& s : samples) {
    if (s.image.width() != s.mask.width() || s.image.height() != s.mask.height()) {
      throw DataError("mask does not match image size: " + s.id);
    }
    sum_w += s.bbox.width();
    sum_h += s.bbox.height();
    const GrayImage mask_gray = mask_to_gray(s.mask);
    const std::vector<Keypoint> kps = detect_harris_laplace(s.image, params.detector);
    local.detected_keypoints += static_cast<int>(kps.size());
    for (const Keypoint& kp : kps) {
      const int px = static_cast<int>(std::lround(kp.x)), py = static_cast<int>(std::lround(kp.y));
      if (!s.mask.contains(px, py) || !s.mask.at(px, py)) continue;
      SiftDescriptor app = compute_sift(s.image, kp, params.sift);
      if (app.is_zero()) continue;
      appearance.push_back(app);
      shape.push_back(compute_sift(mask_gray, kp, params.sift));
      Occurrence occ;
      occ.dx = kp.x - s.bbox.cx();
      occ.dy = kp.y - s.bbox.cy();
      occ.feat_scale = kp.scale;
      occ.obj_w = s.bbox.width();
      occ.obj_h = s.bbox.height();
      occ.source_image = s.id;
      occ.x = kp.x;
      occ.y = kp.y;
      occurrences.push_back(std::move(occ));
    }
  }
  local.kept_keypoints = static_cast<int>(appearance.size());
  if (stats) *stats = local;
  if (appearance.empty()) throw DataError("no foreground keypoints found in any training image");

  Model model;
  model.class_name = class_name;
  model.params = params;
  model.training_images = static_cast<int>(samples.size());
  model.mean_object_w = sum_w / samples.size();
  model.mean_object_h = sum_h / samples.size();
  double scale_sum = 0;
  for (const Occurrence& o : occurrences) scale_sum += o.feat_scale;
  model.mean_feature_scale = scale_sum / occurrences.size();

  const Clustering app_clusters = agglomerative_cluster(appearance, params.t);
  for (const Cluster& c : app_clusters.clusters) {
    Codeword cw;
    cw.center = c.centroid;
    std::vector<SiftDescriptor> member_shapes;
    member_shapes.reserve(c.members.size());
    for (int m : c.members) member_shapes.push_back(shape[m]);
    const Clustering shape_clusters = agglomerative_cluster(member_shapes, params.t);
    std::vector<int> shape_of(c.members.size(), -1);
    for (std::size_t s = 0; s < shape_clusters.clusters.size(); ++s) {
      const Cluster& sc = shape_clusters.clusters[s];
      ShapeEntry entry;
      entry.descriptor = quantize(sc.centroid, params.beta);
      entry.strengths = cell_strengths(entry.descriptor);
      entry.member_count = static_cast<int>(sc.members.size());
      cw.shape_codebook.push_back(entry);
      for (int m : sc.members) shape_of[m] = static_cast<int>(s);
    }
    for (std::size_t k = 0; k < c.members.size(); ++k) {
      Occurrence occ = occurrences[c.members[k]];
      occ.shape_idx = shape_of[k];
      cw.occurrences.push_back(std::move(occ));
    }
    model.codewords.push_back(std::move(cw));
  }
  return model;
}

}  // namespace bsm
