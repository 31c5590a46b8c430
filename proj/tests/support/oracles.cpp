#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bsm::oracle {

std::vector<int> active_bins(const SiftDescriptor& d, double beta) {
  double mx = 0;
  for (int i = 0; i < kSiftLength; ++i) mx = std::max(mx, d[i]);
  std::vector<int> out;
  for (int i = 0; i < kSiftLength; ++i) {
    if (d[i] > beta * mx) out.push_back(i);
  }
  return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  long inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      inter += a.at(x, y) && b.at(x, y);
      uni += a.at(x, y) || b.at(x, y);
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

double average_precision(const std::vector<RankedDetection>& dets, const std::vector<TruthMask>& gts,
                         double iou_thresh) {
  if (gts.empty()) return 0;
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<bool> used(gts.size(), false);
  std::vector<bool> tp;
  for (std::size_t k : order) {
    bool any_gt = false;
    int best = -1;
    double best_iou = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].image_id != dets[k].image_id) continue;
      any_gt = true;
      if (used[g]) continue;
      const double v = mask_iou(dets[k].mask, gts[g].mask);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (!any_gt) continue;
    const bool hit = best >= 0 && best_iou >= iou_thresh;
    if (hit) used[best] = true;
    tp.push_back(hit);
  }
  std::vector<double> precision, recall;
  int hits = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += tp[i];
    precision.push_back(static_cast<double>(hits) / (i + 1));
    recall.push_back(static_cast<double>(hits) / gts.size());
  }
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (!tp[i]) continue;
    double best = 0;
    for (std::size_t j = 0; j < tp.size(); ++j) {
      if (recall[j] >= recall[i]) best = std::max(best, precision[j]);
    }
    ap += (recall[i] - prev_recall) * best;
    prev_recall = recall[i];
  }
  return ap;
}

namespace {

double descriptor_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return 1.0 - std::sqrt(d2) / std::sqrt(2.0);
}

std::vector<double> unit_mean(const std::vector<SiftDescriptor>& descs, const std::vector<int>& members) {
  std::vector<double> m(kSiftLength, 0.0);
  for (int i : members) {
    for (int k = 0; k < kSiftLength; ++k) m[k] += descs[i][k];
  }
  double n = 0;
  for (double v : m) n += v * v;
  n = std::sqrt(n);
  for (double& v : m) v /= n;
  return m;
}

}  // namespace

std::vector<std::vector<int>> greedy_cluster(const std::vector<SiftDescriptor>& descs, double t) {
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < static_cast<int>(descs.size()); ++i) clusters.push_back({i});
  while (clusters.size() > 1) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double s = descriptor_similarity(unit_mean(descs, clusters[a]), unit_mean(descs, clusters[b]));
        if (s > best) {
          best = s;
          ba = a;
          bb = b;
        }
      }
    }
    if (best < t) break;
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    std::sort(clusters[ba].begin(), clusters[ba].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  std::sort(clusters.begin(), clusters.end());
  return clusters;
}

double crf_kernel(const CrfParams& p, int xi, int yi, const std::uint8_t* ci, int xj, int yj,
                  const std::uint8_t* cj) {
  const double d2 = static_cast<double>((xi - xj) * (xi - xj) + (yi - yj) * (yi - yj));
  double c2 = 0;
  for (int c = 0; c < 3; ++c) c2 += (static_cast<double>(ci[c]) - cj[c]) * (static_cast<double>(ci[c]) - cj[c]);
  return p.w_appearance *
             std::exp(-d2 / (2 * p.theta_alpha * p.theta_alpha) - c2 / (2 * p.theta_beta * p.theta_beta)) +
         p.w_smoothness * std::exp(-d2 / (2 * p.theta_gamma * p.theta_gamma));
}

namespace {

double xlogx(double v) { return v > 0 ? v * std::log(v) : 0.0; }

}  // namespace

double free_energy(const ScalarField& psi_fg, const ScalarField& psi_bg, const RgbImage& img,
                   const CrfParams& p, const ScalarField& q) {
  const int w = img.width();
  const int n = static_cast<int>(img.pixel_count());
  const auto& qd = q.data();
  double unary = 0, entropy = 0;
  for (int i = 0; i < n; ++i) {
    unary += qd[i] * psi_fg.data()[i] + (1 - qd[i]) * psi_bg.data()[i];
    entropy += xlogx(qd[i]) + xlogx(1 - qd[i]);
  }
  double pairwise = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint8_t* ci = &img.data()[3 * static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      const double k = crf_kernel(p, i % w, i / w, ci, j % w, j / w, &img.data()[3 * static_cast<std::size_t>(j)]);
      pairwise += k * (qd[i] * (1 - qd[j]) + qd[j] * (1 - qd[i]));
    }
  }
  return unary + pairwise + entropy;
}

ScalarField meanfield_step(const ScalarField& psi_fg, const ScalarField& psi_bg, const RgbImage& img,
                           const CrfParams& p, const ScalarField& q) {
  const int w = img.width();
  const int n = static_cast<int>(img.pixel_count());
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    // Expected Potts cost of each label given the other pixels' marginals.
    double cost_fg = psi_fg.data()[i], cost_bg = psi_bg.data()[i];
    const std::uint8_t* ci = &img.data()[3 * static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double k = crf_kernel(p, i % w, i / w, ci, j % w, j / w, &img.data()[3 * static_cast<std::size_t>(j)]);
      cost_fg += k * (1 - q.data()[j]);
      cost_bg += k * q.data()[j];
    }
    const double m = std::min(cost_fg, cost_bg);
    const double efg = std::exp(-(cost_fg - m)), ebg = std::exp(-(cost_bg - m));
    out[i] = efg / (efg + ebg);
  }
  return ScalarField(w, img.height(), std::move(out));
}

std::vector<double> gaussian_sums(const std::vector<double>& features, int dim, const std::vector<double>& in) {
  const std::size_t n = in.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0;
      for (int k = 0; k < dim; ++k) {
        const double d = features[i * dim + k] - features[j * dim + k];
        d2 += d * d;
      }
      out[i] += std::exp(-0.5 * d2) * in[j];
    }
  }
  return out;
}

double color_kde(const RgbImage& img, const std::vector<std::size_t>& seeds, const std::uint8_t* color,
                 double h) {
  double acc = 0;
  for (std::size_t s : seeds) {
    double d2 = 0;
    for (int c = 0; c < 3; ++c) {
      const double d = static_cast<double>(img.data()[3 * s + c]) - color[c];
      d2 += d * d;
    }
    acc += std::exp(-0.5 * d2 / (h * h));
  }
  return acc / static_cast<double>(seeds.size());
}

}  // namespace bsm::oracle
