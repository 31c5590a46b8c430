#pragma once

#include <span>
#include <string>
#include <vector>

#include "bsm/codebook.hpp"
#include "bsm/features.hpp"
#include "bsm/image.hpp"

namespace bsm {

/// A keypoint with its appearance descriptor. Ids are unique within one
/// detection run.
struct Feature {
  int id = 0;
  Keypoint kp;
  SiftDescriptor desc;
};

struct Match {
  int feature_id = 0;
  Keypoint kp;
  int codeword_id = 0;
  double sim = 0;
};

struct Vote {
  double cx = 0;
  double cy = 0;
  double s = 1;  ///< test feature scale / training feature scale
  double weight = 0;
  int feature_id = 0;
  int codeword_id = 0;
  int occurrence_id = 0;
  Keypoint anchor;  ///< the voting feature

  bool operator==(const Vote&) const = default;
};

struct Hypothesis {
  double cx = 0;
  double cy = 0;
  double s = 1;
  double score = 0;
  Rect roi;
  std::vector<Vote> contributors;
  bool refined = false;
  bool outside_image = false;  ///< set when refinement found no ROI pixels in the image
};

struct ModeSearchParams {
  /// Spatial kernel width at s = 1, pixels.
  double bandwidth = 8.0;
  /// Kernel width along log scale.
  double log_scale_bandwidth = 0.3;
  double object_w = 1;
  double object_h = 1;
  /// Modes closer than this many kernel widths are merged.
  double dedupe_radius = 0.5;
  /// Votes within this many kernel widths of a mode are its contributors.
  double contributor_radius = 2.0;
  double nms_iou = 0.5;
  /// Hypotheses scoring below this fraction of the best are dropped.
  double min_score_ratio = 0.1;
  int max_iterations = 200;
};

struct DetectionParams {
  /// Spatial bandwidth as a fraction of the mean training object diagonal.
  double bandwidth_factor = 0.1;
  double log_scale_bandwidth = 0.3;
  double min_score_ratio = 0.1;
  double nms_iou = 0.5;
  bool refine = true;
  double refine_stride = 4.0;
  std::vector<double> refine_scales{0.75, 1.0, 1.5};
  /// Refinement keeps votes landing within this fraction of the ROI diagonal.
  double refine_radius = 0.25;
  int max_hypotheses = 5;

  void validate() const;
  bool operator==(const DetectionParams&) const = default;
};

std::vector<Feature> extract_features(const GrayImage& img, const ModelParams& params);

/// Every (feature, codeword) pair with similarity >= t.
std::vector<Match> match_features(std::span<const Feature> features, const Model& model);

/// One vote per (match, occurrence), weighted 1 / (|M_k| |O_i|) where |M_k| is
/// the number of codewords feature k matched and |O_i| the occurrence count of
/// codeword i.
std::vector<Vote> cast_votes(std::span<const Match> matches, const Model& model);

/// Weighted mean-shift over (x, y, log s) with a scale-adaptive spatial
/// kernel, followed by deduplication and non-maximum suppression.
std::vector<Hypothesis> estimate_modes(std::span<const Vote> votes, const ModeSearchParams& params);

/// Kernel-weighted vote mass of `votes` around the hypothesis location.
double kernel_mass(std::span<const Vote> votes, double cx, double cy, double s,
                   const ModeSearchParams& params);

/// Adds votes from dense sampling inside the ROI that land near the
/// hypothesis center. Location and scale stay fixed.
Hypothesis refine_hypothesis(const Hypothesis& h, const GrayImage& img, const Model& model,
                             const DetectionParams& params, int feature_id_base = 1 << 20);

ModeSearchParams mode_search_params(const Model& model, const DetectionParams& params);

/// Full pipeline: features, matching, voting, modes, optional refinement.
std::vector<Hypothesis> detect(const GrayImage& img, const Model& model,
                               const DetectionParams& params = {});

}  // namespace bsm
