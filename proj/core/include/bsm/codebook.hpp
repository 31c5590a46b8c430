#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bsm/features.hpp"
#include "bsm/image.hpp"
#include "bsm/shape_descriptor.hpp"

namespace bsm {

inline constexpr int kModelFormatVersion = 1;

/// Training record of one foreground feature, used for Hough voting.
struct Occurrence {
  double dx = 0;  ///< feature x minus object center x, training pixels
  double dy = 0;
  double feat_scale = 1;
  double obj_w = 1;
  double obj_h = 1;
  int shape_idx = 0;  ///< entry in the owning codeword's shape codebook
  std::string source_image;
  double x = 0;  ///< feature location in the source image
  double y = 0;

  bool operator==(const Occurrence&) const = default;
};

struct ShapeEntry {
  ShapeDescriptor descriptor;
  StrengthGrid strengths;
  int member_count = 0;

  bool operator==(const ShapeEntry&) const = default;
};

struct Codeword {
  SiftDescriptor center;
  std::vector<Occurrence> occurrences;
  std::vector<ShapeEntry> shape_codebook;

  bool operator==(const Codeword&) const = default;
};

struct ModelParams {
  double t = 0.7;  ///< similarity threshold for clustering and matching
  double beta = kDefaultBeta;
  int base_size = 21;  ///< splat side in pixels at the mean training feature scale
  DetectorParams detector;
  SiftParams sift;

  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

struct Model {
  std::string class_name;
  ModelParams params;
  std::vector<Codeword> codewords;
  double mean_object_w = 0;
  double mean_object_h = 0;
  double mean_feature_scale = 0;
  int training_images = 0;

  std::size_t occurrence_count() const;
  double mean_object_diagonal() const;
  bool operator==(const Model&) const = default;
};

/// 1 - |a-b| / sqrt(2) for unit-norm descriptors, clamped to [0,1].
/// Two all-zero descriptors are identical (1); one all-zero one is unrelated (0).
double similarity(const SiftDescriptor& a, const SiftDescriptor& b);

struct Cluster {
  std::vector<int> members;  ///< ascending input indices
  SiftDescriptor centroid;   ///< renormalized member mean
};

struct MergeRecord {
  int kept = 0;
  int absorbed = 0;
  double similarity = 0;
};

struct Clustering {
  std::vector<Cluster> clusters;  ///< ordered by lowest member index
  std::vector<MergeRecord> merges;
};

/// Agglomerative clustering by reciprocal nearest neighbours: repeatedly merge
/// the lowest-indexed RNN pair whose centroid similarity is at least t.
Clustering agglomerative_cluster(std::span<const SiftDescriptor> descs, double t);

/// Renormalized mean; all-zero when the mean vanishes.
SiftDescriptor normalized_mean(std::span<const SiftDescriptor> descs, std::span<const int> members);

struct TrainingSample {
  std::string id;
  GrayImage image;
  BinaryMask mask;
  Rect bbox;  ///< object bounding box; its center is the object center
};

/// Bounding box of the foreground pixels, with pixel p covering [p-0.5, p+0.5).
/// Throws DataError for an empty mask.
Rect mask_bbox(const BinaryMask& mask);

struct TrainingStats {
  int detected_keypoints = 0;
  int kept_keypoints = 0;
};

/// Learns the appearance codebook with occurrences and per-codeword shape
/// codebooks. Throws DataError if no foreground keypoints are found.
Model build_model(std::span<const TrainingSample> samples, const ModelParams& params,
                  const std::string& class_name = "object", TrainingStats* stats = nullptr);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

}  // namespace bsm
