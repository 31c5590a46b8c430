#include "bsm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace bsm {

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("iou: mask sizes differ");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.data()[i] & b.data()[i];
    uni += a.data()[i] | b.data()[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<DetectionMatch> match_detections(std::span<const SegDetection> dets,
                                             std::span<const GroundTruth> gts, double iou_thresh) {
  for (const SegDetection& d : dets) {
    if (!std::isfinite(d.score)) throw std::invalid_argument("detection scores must be finite");
  }
  std::map<std::string, std::vector<int>> gt_of;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_of[gts[g].image_id].push_back(static_cast<int>(g));

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> taken(gts.size(), false);
  std::vector<DetectionMatch> out;
  for (std::size_t d : order) {
    const auto it = gt_of.find(dets[d].image_id);
    if (it == gt_of.end()) continue;
    DetectionMatch m;
    m.detection = d;
    double best = -1;
    int best_g = -1;
    for (int g : it->second) {
      if (taken[g]) continue;
      const double v = iou(dets[d].mask, gts[g].mask);
      if (v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best_g >= 0 && best >= iou_thresh) {
      taken[best_g] = true;
      m.true_positive = true;
      m.ground_truth = best_g;
      m.iou = best;
    }
    out.push_back(m);
  }
  return out;
}

double average_precision(std::span<const SegDetection> dets, std::span<const GroundTruth> gts,
                         double iou_thresh) {
  if (gts.empty()) return 0.0;
  const std::vector<DetectionMatch> matches = match_detections(dets, gts, iou_thresh);
  const double total = static_cast<double>(gts.size());
  std::vector<double> precision, recall;
  int tp = 0;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    tp += matches[k].true_positive ? 1 : 0;
    precision.push_back(tp / static_cast<double>(k + 1));
    recall.push_back(tp / total);
  }
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0, prev_recall = 0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

double coco_map(std::span<const SegDetection> dets, std::span<const GroundTruth> gts) {
  const std::vector<double> ts = coco_thresholds();
  double sum = 0;
  for (double t : ts) sum += average_precision(dets, gts, t);
  return sum / static_cast<double>(ts.size());
}

EvalSummary summarize(std::span<const SegDetection> dets, std::span<const GroundTruth> gts) {
  EvalSummary s;
  s.detections = static_cast<int>(dets.size());
  s.ground_truths = static_cast<int>(gts.size());
  s.ap50 = average_precision(dets, gts, 0.5);
  s.map = coco_map(dets, gts);
  double iou_sum = 0;
  for (const DetectionMatch& m : match_detections(dets, gts, 0.5)) {
    if (!m.true_positive) continue;
    ++s.true_positives;
    iou_sum += m.iou;
  }
  s.mean_iou = s.true_positives ? iou_sum / s.true_positives : 0.0;
  return s;
}

std::vector<std::string> FoldSpec::members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold_of) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

void FoldSpec::validate() const {
  if (n_folds < 2) throw std::invalid_argument("n_folds must be >= 2");
  for (const auto& [id, f] : fold_of) {
    if (f < 0 || f >= n_folds) throw std::invalid_argument("fold index out of range for " + id);
  }
  std::set<std::string> seen;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("empty fold group");
    for (const std::string& id : g) {
      if (!seen.insert(id).second) throw std::invalid_argument("id in more than one group: " + id);
      const auto it = fold_of.find(id);
      if (it == fold_of.end()) throw std::invalid_argument("grouped id has no fold: " + id);
      if (it->second != fold_of.at(g.front())) throw std::invalid_argument("paired ids split across folds: " + id);
    }
  }
  if (seen.size() != fold_of.size()) throw std::invalid_argument("fold assignment has ungrouped ids");
}

FoldSpec make_folds(std::span<const std::string> image_ids, int n_folds,
                    std::span<const std::vector<std::string>> pairs, std::uint64_t seed) {
  if (n_folds < 2) throw std::invalid_argument("n_folds must be >= 2");
  std::map<std::string, std::size_t> position;
  for (const std::string& id : image_ids) {
    if (!position.emplace(id, position.size()).second) throw std::invalid_argument("duplicate image id: " + id);
  }

  std::map<std::string, int> group_of;
  std::vector<std::vector<std::string>> groups;
  for (const auto& pair : pairs) {
    std::vector<std::string> g;
    for (const std::string& id : pair) {
      if (!position.count(id)) throw std::invalid_argument("pair references unknown image id: " + id);
      if (group_of.count(id)) throw std::invalid_argument("image id in more than one pair set: " + id);
      group_of[id] = static_cast<int>(groups.size());
      g.push_back(id);
    }
    if (!g.empty()) groups.push_back(std::move(g));
  }
  for (const std::string& id : image_ids) {
    if (!group_of.count(id)) {
      group_of[id] = static_cast<int>(groups.size());
      groups.push_back({id});
    }
  }
  // Canonical order by first member position, independent of how pairs were listed.
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [&](const auto& a, const auto& b) { return position[a] < position[b]; });
  }
  std::sort(groups.begin(), groups.end(),
            [&](const auto& a, const auto& b) { return position[a.front()] < position[b.front()]; });
  if (static_cast<std::size_t>(n_folds) > groups.size()) {
    throw std::invalid_argument("n_folds exceeds the number of pair groups");
  }

  // Fisher-Yates with an explicit generator so the result does not depend on
  // the standard library's shuffle.
  std::mt19937_64 rng(seed);
  for (std::size_t i = groups.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(groups[i - 1], groups[j]);
  }

  FoldSpec spec;
  spec.n_folds = n_folds;
  std::vector<std::size_t> sizes(n_folds, 0);
  for (const auto& g : groups) {
    const int f = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    sizes[f] += g.size();
    for (const std::string& id : g) spec.fold_of[id] = f;
  }
  spec.groups = std::move(groups);
  return spec;
}

}  // namespace bsm
