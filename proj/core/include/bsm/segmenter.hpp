#pragma once

#include <span>
#include <string>
#include <vector>

#include "bsm/codebook.hpp"
#include "bsm/detector.hpp"
#include "bsm/image.hpp"
#include "bsm/meanfield.hpp"
#include "bsm/shape_descriptor.hpp"

namespace bsm {

/// Occurrence-weighted shape strengths of one codeword matched by one feature.
struct ConsolidatedStrength {
  StrengthGrid grid;
  int codeword_id = 0;
  int feature_id = 0;
  Keypoint anchor;
};

/// Sums strengths * weight over the hypothesis' contributing votes, one entry
/// per (feature, codeword) pair, ordered by feature id then codeword id.
std::vector<ConsolidatedStrength> consolidate(const Hypothesis& h, const Model& model);

/// Adds each grid, bilinearly upscaled to a square of side
/// base_size * anchor.scale / mean_feature_scale centred on the anchor, into a
/// zero field of the given size. Pixels whose centres fall in the square are
/// covered.
ScalarField splat_likelihood(std::span<const ConsolidatedStrength> strengths, int width, int height,
                             int base_size, double mean_feature_scale);

/// Shape, color and ROI unary terms for one hypothesis. Appends a message to
/// `warnings` when the color term falls back to uniform.
UnaryField build_unary(const ScalarField& likelihood, const RgbImage& img, const Hypothesis& h,
                       const CrfParams& params, std::vector<std::string>* warnings = nullptr);

struct Segmentation {
  BinaryMask mask;
  ScalarField likelihood;
  UnaryField unary;
  MarginalField marginals;
  std::vector<std::string> warnings;
};

Segmentation segment_detailed(const RgbImage& img, const Hypothesis& h, const Model& model,
                              const CrfParams& params, InferenceMode mode = InferenceMode::fast);

/// Foreground where Q(fg) > Q(bg).
BinaryMask segment(const RgbImage& img, const Hypothesis& h, const Model& model, const CrfParams& params,
                   std::vector<std::string>* warnings = nullptr);

/// Pixelwise OR of the per-hypothesis masks; empty when `hyps` is.
BinaryMask segment_all(const RgbImage& img, std::span<const Hypothesis> hyps, const Model& model,
                       const CrfParams& params, std::vector<std::string>* warnings = nullptr);

BinaryMask argmax_mask(const MarginalField& q);

/// Likelihood heatmap: green for foreground evidence, red for background,
/// scaled by the field's largest magnitude.
RgbImage likelihood_heatmap(const ScalarField& field);

/// The heatmap blended over the image.
RgbImage likelihood_overlay(const RgbImage& img, const ScalarField& field, double opacity = 0.5);

}  // namespace bsm
