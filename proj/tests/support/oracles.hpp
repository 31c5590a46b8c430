#pragma once

// Reference implementations used to check the library. They favour the most
// direct formulation over speed and share no code with the library.

#include <cstdint>
#include <string>
#include <vector>

#include "bsm/features.hpp"
#include "bsm/image.hpp"
#include "bsm/meanfield.hpp"

namespace bsm::oracle {

/// Indices i with d(i) > beta * max d.
std::vector<int> active_bins(const SiftDescriptor& d, double beta);

/// Pixel-count intersection over union; 0 for two empty masks.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

struct RankedDetection {
  std::string image_id;
  double score = 0;
  BinaryMask mask;
};
struct TruthMask {
  std::string image_id;
  BinaryMask mask;
};

/// Average precision by explicit precision-recall integration: matching by
/// exhaustive search, then for each recall step the best precision reached at
/// that recall or beyond.
double average_precision(const std::vector<RankedDetection>& dets, const std::vector<TruthMask>& gts,
                         double iou_thresh);

/// Global greedy agglomeration: always merge the most similar pair of current
/// clusters (centroid linkage) while its similarity reaches t. Returns the
/// partition as sorted member lists, sorted by first member.
std::vector<std::vector<int>> greedy_cluster(const std::vector<SiftDescriptor>& descs, double t);

/// Dense CRF pairwise kernel between two pixels.
double crf_kernel(const CrfParams& p, int xi, int yi, const std::uint8_t* ci, int xj, int yj,
                  const std::uint8_t* cj);

/// Gibbs free energy by direct double summation over pixel pairs.
double free_energy(const ScalarField& psi_fg, const ScalarField& psi_bg, const RgbImage& img,
                   const CrfParams& p, const ScalarField& q);

/// One plain parallel mean-field update by direct summation.
ScalarField meanfield_step(const ScalarField& psi_fg, const ScalarField& psi_bg, const RgbImage& img,
                           const CrfParams& p, const ScalarField& q);

/// sum_j exp(-|f_i - f_j|^2 / 2) * in_j for every point i.
std::vector<double> gaussian_sums(const std::vector<double>& features, int dim, const std::vector<double>& in);

/// Direct Gaussian KDE of RGB colors at `color`, per-channel bandwidth h,
/// averaged over the seed pixels (unnormalized kernel).
double color_kde(const RgbImage& img, const std::vector<std::size_t>& seeds, const std::uint8_t* color,
                 double h);

}  // namespace bsm::oracle
