#include "bsm/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "bsm/bilateral_grid.hpp"

namespace bsm {

void CrfParams::validate() const {
  for (double v : {lambda_shape, lambda_color, lambda_roi, w_appearance, w_smoothness, roi_penalty}) {
    if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("CRF weights must be finite and >= 0");
  }
  for (double v : {theta_alpha, theta_beta, theta_gamma, kde_bandwidth}) {
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("CRF kernel widths must be positive");
  }
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(seed_threshold > 0 && seed_threshold < 1)) throw std::invalid_argument("seed_threshold must lie in (0,1)");
  if (min_seed_pixels < 1) throw std::invalid_argument("min_seed_pixels must be >= 1");
  if (!(roi_fg_factor > 0) || !(bg_outside_factor > 0)) throw std::invalid_argument("ROI factors must be positive");
  if (!(grid_oversampling >= 1)) throw std::invalid_argument("grid_oversampling must be >= 1");
}

UnaryField UnaryField::from_energies(ScalarField fg, ScalarField bg) {
  if (fg.width() != bg.width() || fg.height() != bg.height()) {
    throw std::invalid_argument("unary label fields differ in size");
  }
  UnaryField u;
  const ScalarField zero(fg.width(), fg.height(), 0.0);
  u.shape = {zero, zero};
  u.color = {zero, zero};
  u.roi = {zero, zero};
  u.energy = {std::move(fg), std::move(bg)};
  return u;
}

namespace {

double sigmoid_neg(double d) {
  // 1 / (1 + exp(d)) without overflow.
  if (d >= 0) {
    const double e = std::exp(-d);
    return e / (1 + e);
  }
  return 1 / (1 + std::exp(d));
}

constexpr double kConverged = 1e-10;
constexpr double kMinStep = 1.0 / (1 << 20);
constexpr double kEnergySlack = 1e-9;

double xlogx(double v) { return v > 0 ? v * std::log(v) : 0.0; }

/// Sum over j != i of k(i,j) v_j for the combined pairwise kernel.
class Pairwise {
 public:
  virtual ~Pairwise() = default;
  virtual void apply(const std::vector<double>& v, std::vector<double>& out) const = 0;
  const std::vector<double>& row_sums() const { return row_sums_; }

 protected:
  void init_row_sums(std::size_t n) {
    std::vector<double> ones(n, 1.0);
    apply(ones, row_sums_);
  }
  std::vector<double> row_sums_;
};

class ExactPairwise final : public Pairwise {
 public:
  ExactPairwise(const RgbImage& img, const CrfParams& p) : w_(img.width()), h_(img.height()) {
    const std::size_t n = img.pixel_count();
    rgb_.resize(n * 3);
    for (std::size_t i = 0; i < n * 3; ++i) rgb_[i] = img.data()[i];
    color_.resize(3 * 255 * 255 + 1);
    for (std::size_t d2 = 0; d2 < color_.size(); ++d2) {
      color_[d2] = std::exp(-static_cast<double>(d2) / (2 * p.theta_beta * p.theta_beta));
    }
    app_.resize(static_cast<std::size_t>(w_) * h_);
    smooth_.resize(app_.size());
    for (int dy = 0; dy < h_; ++dy) {
      for (int dx = 0; dx < w_; ++dx) {
        const double r2 = dx * dx + dy * dy;
        app_[dy * w_ + dx] = p.w_appearance * std::exp(-r2 / (2 * p.theta_alpha * p.theta_alpha));
        smooth_[dy * w_ + dx] = p.w_smoothness * std::exp(-r2 / (2 * p.theta_gamma * p.theta_gamma));
      }
    }
    init_row_sums(n);
  }

  void apply(const std::vector<double>& v, std::vector<double>& out) const override {
    const std::size_t n = static_cast<std::size_t>(w_) * h_;
    out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int xi = static_cast<int>(i % w_), yi = static_cast<int>(i / w_);
      const int ri = rgb_[3 * i], gi = rgb_[3 * i + 1], bi = rgb_[3 * i + 2];
      double acc = 0;
      const double vi = v[i];
      for (std::size_t j = i + 1; j < n; ++j) {
        const int xj = static_cast<int>(j % w_), yj = static_cast<int>(j / w_);
        const int dr = ri - rgb_[3 * j], dg = gi - rgb_[3 * j + 1], db = bi - rgb_[3 * j + 2];
        const std::size_t off = static_cast<std::size_t>(yj - yi) * w_ + std::abs(xj - xi);
        const double k = app_[off] * color_[dr * dr + dg * dg + db * db] + smooth_[off];
        acc += k * v[j];
        out[j] += k * vi;
      }
      out[i] += acc;
    }
  }

 private:
  int w_, h_;
  std::vector<int> rgb_;
  std::vector<double> color_;
  std::vector<double> app_;
  std::vector<double> smooth_;
};

class FastPairwise final : public Pairwise {
 public:
  FastPairwise(const RgbImage& img, const CrfParams& p) : w_(img.width()), h_(img.height()), p_(p) {
    const std::size_t n = img.pixel_count();
    if (p.w_appearance > 0) {
      std::vector<double> f(n * 5);
      for (std::size_t i = 0; i < n; ++i) {
        f[5 * i] = static_cast<double>(i % w_) / p.theta_alpha;
        f[5 * i + 1] = static_cast<double>(i / w_) / p.theta_alpha;
        for (int c = 0; c < 3; ++c) f[5 * i + 2 + c] = img.data()[3 * i + c] / p.theta_beta;
      }
      grid_ = std::make_unique<BilateralGrid>(f, 5, p.grid_oversampling);
      self_.resize(n);
      for (std::size_t i = 0; i < n; ++i) self_[i] = grid_->self_weight(i);
    }
    const int radius = static_cast<int>(std::ceil(4 * p.theta_gamma));
    taps_.resize(2 * radius + 1);
    for (int t = -radius; t <= radius; ++t) {
      taps_[t + radius] = std::exp(-0.5 * t * t / (p.theta_gamma * p.theta_gamma));
    }
    init_row_sums(n);
  }

  void apply(const std::vector<double>& v, std::vector<double>& out) const override {
    const std::size_t n = static_cast<std::size_t>(w_) * h_;
    out.assign(n, 0.0);
    if (grid_) {
      std::vector<double> filtered(n);
      grid_->filter(v, 1, filtered);
      for (std::size_t i = 0; i < n; ++i) out[i] += p_.w_appearance * (filtered[i] - self_[i] * v[i]);
    }
    if (p_.w_smoothness > 0) {
      const std::vector<double> blurred = spatial(v);
      for (std::size_t i = 0; i < n; ++i) out[i] += p_.w_smoothness * (blurred[i] - v[i]);
    }
  }

 private:
  // Separable unnormalized Gaussian over the pixel grid; pixels outside the
  // image contribute nothing.
  std::vector<double> spatial(const std::vector<double>& v) const {
    const int radius = static_cast<int>(taps_.size() / 2);
    std::vector<double> tmp(v.size(), 0.0), out(v.size(), 0.0);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        double acc = 0;
        for (int t = std::max(-radius, -x); t <= std::min(radius, w_ - 1 - x); ++t) {
          acc += taps_[t + radius] * v[static_cast<std::size_t>(y) * w_ + x + t];
        }
        tmp[static_cast<std::size_t>(y) * w_ + x] = acc;
      }
    }
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        double acc = 0;
        for (int t = std::max(-radius, -y); t <= std::min(radius, h_ - 1 - y); ++t) {
          acc += taps_[t + radius] * tmp[static_cast<std::size_t>(y + t) * w_ + x];
        }
        out[static_cast<std::size_t>(y) * w_ + x] = acc;
      }
    }
    return out;
  }

  int w_, h_;
  CrfParams p_;
  std::unique_ptr<BilateralGrid> grid_;
  std::vector<double> self_;
  std::vector<double> taps_;
};

std::unique_ptr<Pairwise> make_pairwise(const RgbImage& img, const CrfParams& p, InferenceMode mode) {
  if (mode == InferenceMode::exact) {
    if (img.width() > kExactMaxSide || img.height() > kExactMaxSide) {
      throw std::invalid_argument("exact inference is limited to images of at most " +
                                  std::to_string(kExactMaxSide) + "x" + std::to_string(kExactMaxSide));
    }
    return std::make_unique<ExactPairwise>(img, p);
  }
  return std::make_unique<FastPairwise>(img, p);
}

void check_inputs(const UnaryField& unary, const RgbImage& img, const CrfParams& params) {
  params.validate();
  if (img.pixel_count() == 0 || unary.width() != img.width() || unary.height() != img.height() ||
      unary.energy.bg.width() != img.width() || unary.energy.bg.height() != img.height()) {
    throw std::invalid_argument("unary field does not match the image size");
  }
}

// `a` holds the pairwise sums of q.
double free_energy(const UnaryField& u, const std::vector<double>& q, const std::vector<double>& a,
                   const std::vector<double>& s) {
  const auto& fg = u.energy.fg.data();
  const auto& bg = u.energy.bg.data();
  double f = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double qi = q[i];
    f += qi * fg[i] + (1 - qi) * bg[i];
    f += 0.5 * (qi * (s[i] - a[i]) + (1 - qi) * a[i]);
    f += xlogx(qi) + xlogx(1 - qi);
  }
  return f;
}

}  // namespace

MarginalField unary_marginals(const UnaryField& unary) {
  const auto& fg = unary.energy.fg.data();
  const auto& bg = unary.energy.bg.data();
  std::vector<double> q(fg.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = sigmoid_neg(fg[i] - bg[i]);
  return {ScalarField(unary.width(), unary.height(), std::move(q))};
}

MarginalField meanfield_infer(const UnaryField& unary, const RgbImage& img, const CrfParams& params,
                              InferenceMode mode, MeanFieldTrace* trace) {
  check_inputs(unary, img, params);
  const auto pairwise = make_pairwise(img, params, mode);
  const std::vector<double>& s = pairwise->row_sums();
  const auto& fg = unary.energy.fg.data();
  const auto& bg = unary.energy.bg.data();
  const std::size_t n = fg.size();

  std::vector<double> q = unary_marginals(unary).q.data();
  std::vector<double> a;
  pairwise->apply(q, a);
  double f = free_energy(unary, q, a, s);
  if (trace) *trace = {{f}, {}};

  std::vector<double> target(n), cand(n), cand_a;
  for (int it = 0; it < params.iterations; ++it) {
    // E(fg) - E(bg) with messages sum_j k (1 - q_j) and sum_j k q_j.
    double change = 0;
    for (std::size_t i = 0; i < n; ++i) {
      target[i] = sigmoid_neg(fg[i] - bg[i] + s[i] - 2 * a[i]);
      change = std::max(change, std::abs(target[i] - q[i]));
    }
    double alpha = 1;
    if (change < kConverged) {
      q.swap(target);
      pairwise->apply(q, a);
      f = free_energy(unary, q, a, s);
    } else {
      for (alpha = 1; alpha >= kMinStep; alpha *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) cand[i] = alpha == 1 ? target[i] : q[i] + alpha * (target[i] - q[i]);
        pairwise->apply(cand, cand_a);
        const double cf = free_energy(unary, cand, cand_a, s);
        if (cf <= f + kEnergySlack) {
          q.swap(cand);
          a.swap(cand_a);
          f = cf;
          break;
        }
      }
      if (alpha < kMinStep) alpha = 0;
    }
    if (trace) {
      trace->free_energy.push_back(f);
      trace->step.push_back(alpha);
    }
  }
  return {ScalarField(unary.width(), unary.height(), std::move(q))};
}

double gibbs_free_energy(const UnaryField& unary, const RgbImage& img, const CrfParams& params,
                         const MarginalField& q, InferenceMode mode) {
  check_inputs(unary, img, params);
  if (q.width() != img.width() || q.height() != img.height()) {
    throw std::invalid_argument("marginals do not match the image size");
  }
  const auto pairwise = make_pairwise(img, params, mode);
  std::vector<double> a;
  pairwise->apply(q.q.data(), a);
  return free_energy(unary, q.q.data(), a, pairwise->row_sums());
}

}  // namespace bsm
