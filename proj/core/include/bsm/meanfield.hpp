#pragma once

#include <vector>

#include "bsm/image.hpp"

namespace bsm {

struct CrfParams {
  double lambda_shape = 1.0;
  double lambda_color = 0.5;
  double lambda_roi = 1.0;
  double w_appearance = 5.0;
  double w_smoothness = 3.0;
  double theta_alpha = 40.0;  ///< spatial width of the appearance kernel, pixels
  double theta_beta = 13.0;   ///< color width of the appearance kernel, 0-255 units
  double theta_gamma = 3.0;   ///< spatial width of the smoothness kernel, pixels
  int iterations = 10;

  double kde_bandwidth = 12.0;  ///< per channel, 0-255 units
  double seed_threshold = 0.5;
  int min_seed_pixels = 50;
  double roi_penalty = 10.0;
  double roi_fg_factor = 1.2;
  double bg_outside_factor = 1.5;

  /// Grid cells per kernel width in fast mode.
  double grid_oversampling = 2.0;

  void validate() const;
  bool operator==(const CrfParams&) const = default;
};

struct LabelFields {
  ScalarField fg;
  ScalarField bg;
};

/// Per-pixel label energies and the weighted components they were built from.
struct UnaryField {
  LabelFields energy;
  LabelFields shape;
  LabelFields color;
  LabelFields roi;
  double lambda_shape = 0;
  double lambda_color = 0;
  double lambda_roi = 0;
  bool uniform_color = false;  ///< color term fell back to 0

  int width() const { return energy.fg.width(); }
  int height() const { return energy.fg.height(); }

  /// Unary holding only the given energies; components are zero.
  static UnaryField from_energies(ScalarField fg, ScalarField bg);
};

/// Foreground marginal per pixel; the background marginal is its complement.
struct MarginalField {
  ScalarField q;

  double fg(int x, int y) const { return q.at(x, y); }
  double bg(int x, int y) const { return 1.0 - q.at(x, y); }
  int width() const { return q.width(); }
  int height() const { return q.height(); }
};

enum class InferenceMode { exact, fast };

/// Largest side length accepted in exact mode.
inline constexpr int kExactMaxSide = 96;

struct MeanFieldTrace {
  /// Free energy of the initial marginals and after each iteration.
  std::vector<double> free_energy;
  /// Step size accepted at each iteration; 1 is the plain update.
  std::vector<double> step;
};

/// Mean-field inference for the two-label dense CRF with Potts compatibility.
/// An update that would raise the free energy is damped toward the current
/// marginals until it does not.
MarginalField meanfield_infer(const UnaryField& unary, const RgbImage& img, const CrfParams& params,
                              InferenceMode mode = InferenceMode::fast, MeanFieldTrace* trace = nullptr);

/// Gibbs free energy E_Q[E] - H(Q) of fully factorized marginals, with the
/// pairwise expectation computed as in `mode`.
double gibbs_free_energy(const UnaryField& unary, const RgbImage& img, const CrfParams& params,
                         const MarginalField& q, InferenceMode mode = InferenceMode::exact);

/// Q = softmax(-psi), the zero-iteration marginals.
MarginalField unary_marginals(const UnaryField& unary);

}  // namespace bsm
