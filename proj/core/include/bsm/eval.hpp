#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bsm/image.hpp"

namespace bsm {

struct SegDetection {
  std::string image_id;
  BinaryMask mask;
  double score = 0;
};

struct GroundTruth {
  std::string image_id;
  BinaryMask mask;
};

/// |a & b| / |a | b|; 0 when both are empty. Throws on a size mismatch.
double iou(const BinaryMask& a, const BinaryMask& b);

struct DetectionMatch {
  std::size_t detection = 0;  ///< index into the input detections
  bool true_positive = false;
  int ground_truth = -1;      ///< index into the input ground truths
  double iou = 0;
};

/// Greedy matching in descending score order (stable for ties): each
/// detection takes the unmatched ground truth of its image with the highest
/// IoU, if that IoU reaches `iou_thresh`. Detections on images without ground
/// truth are left out.
std::vector<DetectionMatch> match_detections(std::span<const SegDetection> dets,
                                             std::span<const GroundTruth> gts, double iou_thresh);

/// Area under the monotone precision envelope of the ranked matches.
/// Zero when there is no ground truth.
double average_precision(std::span<const SegDetection> dets, std::span<const GroundTruth> gts,
                         double iou_thresh = 0.5);

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_thresholds();

/// Mean of average_precision over coco_thresholds().
double coco_map(std::span<const SegDetection> dets, std::span<const GroundTruth> gts);

struct EvalSummary {
  double ap50 = 0;
  double map = 0;
  double mean_iou = 0;  ///< over true positives at IoU 0.5
  int detections = 0;
  int ground_truths = 0;
  int true_positives = 0;
};

EvalSummary summarize(std::span<const SegDetection> dets, std::span<const GroundTruth> gts);

struct FoldSpec {
  int n_folds = 0;
  std::map<std::string, int> fold_of;
  /// Ids that must share a fold, including singletons, in assignment order.
  std::vector<std::vector<std::string>> groups;

  std::vector<std::string> members(int fold) const;
  /// Throws std::invalid_argument when a constraint is violated.
  void validate() const;
  bool operator==(const FoldSpec&) const = default;
};

/// Shuffles the pair groups with `seed` and hands each to the currently
/// smallest fold (lowest index on ties), which is round-robin when all groups
/// have one member. Fold sizes then differ by at most the largest group size.
FoldSpec make_folds(std::span<const std::string> image_ids, int n_folds,
                    std::span<const std::vector<std::string>> pairs, std::uint64_t seed);

}  // namespace bsm
