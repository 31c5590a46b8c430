// Acceptance suite: one PASS/FAIL line per blocking criterion, plus an
// informational line comparing against published benchmark numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bsm/cli/commands.hpp"
#include "bsm/codebook.hpp"
#include "bsm/detector.hpp"
#include "bsm/eval.hpp"
#include "bsm/meanfield.hpp"
#include "bsm/segmenter.hpp"
#include "bsm/shape_descriptor.hpp"
#include "bsm/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

using namespace bsm;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome shape_signs() {
  using Inside = std::function<bool(double, double)>;
  const std::vector<std::pair<std::string, Inside>> cases{
      {"right", [](double x, double) { return x >= 48; }},
      {"left", [](double x, double) { return x < 48; }},
      {"below", [](double, double y) { return y >= 48; }},
      {"above", [](double, double y) { return y < 48; }},
      {"diagonal", [](double x, double y) { return x + y >= 96; }},
      {"antidiagonal", [](double x, double y) { return x - y >= 0; }},
      {"corner_se", [](double x, double y) { return x >= 48 && y >= 48; }},
      {"corner_nw", [](double x, double y) { return x < 48 && y < 48; }},
  };
  const auto t0 = Clock::now();
  int cells = 0, correct = 0;
  const Keypoint kp{47.5, 47.5, 3.5, 0};
  const double w = SiftParams{}.patch_factor * kp.scale / kSiftCells;
  for (const auto& [name, inside] : cases) {
    const BinaryMask m = testing::mask_from(96, 96, inside);
    const ShapeDescriptor sd = extract_shape_descriptor(m, kp);
    const StrengthGrid g = cell_strengths(sd);
    for (int c = 0; c < kShapeCells; ++c) {
      if (!sd.cell_empty(c)) continue;
      const double cx = kp.x + ((c % kSiftCells) - 1.5) * w, cy = kp.y + ((c / kSiftCells) - 1.5) * w;
      ++cells;
      correct += inside(cx, cy) ? g[c] > 0 : g[c] < 0;
    }
  }
  const double t = seconds_since(t0);
  std::ostringstream d;
  d << correct << "/" << cells << " empty cells correct, " << t << " s";
  return {cells > 0 && correct == cells && t < 1.0, d.str()};
}

Outcome quantization() {
  std::mt19937_64 rng(11);
  int ok = 0;
  for (int k = 0; k < 1000; ++k) {
    const SiftDescriptor d = testing::random_descriptor(rng);
    const ShapeDescriptor sd = quantize(d, 0.4);
    std::vector<int> got;
    for (int i = 0; i < kSiftLength; ++i) {
      if (sd.bins[i]) got.push_back(i);
    }
    ok += got == oracle::active_bins(d, 0.4);
  }
  return {ok == 1000, std::to_string(ok) + "/1000 descriptors match"};
}

Outcome vote_mass() {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> n_codewords(1, 12), n_occ(1, 9), n_feat(1, 8);
  std::uniform_real_distribution<double> coord(0, 200), scale(1, 6);
  int ok = 0;
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    Model model;
    model.codewords.resize(n_codewords(rng));
    for (Codeword& cw : model.codewords) {
      cw.occurrences.resize(n_occ(rng));
      for (Occurrence& o : cw.occurrences) {
        o.dx = coord(rng) - 100;
        o.dy = coord(rng) - 100;
        o.feat_scale = scale(rng);
      }
    }
    std::vector<Match> matches;
    const int nf = n_feat(rng);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(model.codewords.size()) - 1);
    for (int f = 0; f < nf; ++f) {
      const Keypoint kp{coord(rng), coord(rng), scale(rng), 0};
      std::vector<int> cws;
      const int m = std::uniform_int_distribution<int>(1, static_cast<int>(model.codewords.size()))(rng);
      while (static_cast<int>(cws.size()) < m) {
        const int c = pick(rng);
        if (std::find(cws.begin(), cws.end(), c) == cws.end()) cws.push_back(c);
      }
      for (int c : cws) matches.push_back({f, kp, c, 0.8});
    }
    std::map<int, double> mass;
    for (const Vote& v : cast_votes(matches, model)) mass[v.feature_id] += v.weight;
    bool good = static_cast<int>(mass.size()) == nf;
    for (const auto& [f, m] : mass) {
      worst = std::max(worst, std::abs(m - 1.0));
      good = good && std::abs(m - 1.0) <= 1e-12;
    }
    ok += good;
  }
  std::ostringstream d;
  d << ok << "/1000 configurations, worst deviation " << worst;
  return {ok == 1000, d.str()};
}

struct CrfInstance {
  RgbImage image;
  UnaryField unary;
};

// Noisy, blurred signed evidence around a synthetic object, turned into a
// unary with the segmentation pipeline's own construction.
std::vector<CrfInstance> crf_instances(int size, int n, std::uint64_t seed, const CrfParams& cp) {
  SynthParams sp;
  sp.width = size;
  sp.height = size;
  sp.object_radius = size * 5 / 16;
  sp.clutter_shapes = 6;
  std::vector<CrfInstance> out;
  for (const SynthSample& s : generate_synthetic(sp, n, seed)) {
    std::mt19937 rng(s.cx * 100 + s.cy);
    std::normal_distribution<double> noise(0, 0.3);
    std::vector<double> plane(s.image.pixel_count());
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = (s.mask.data()[i] ? 1.0 : -1.0) + noise(rng);
    blur_plane(plane, size, size, 2.0);
    Hypothesis h;
    h.cx = s.cx;
    h.cy = s.cy;
    h.roi = mask_bbox(s.mask);
    out.push_back({s.image, build_unary(ScalarField(size, size, plane), s.image, h, cp)});
  }
  return out;
}

Outcome meanfield_equivalence() {
  const CrfParams cp;
  const std::vector<CrfInstance> instances = crf_instances(64, 10, 3, cp);
  double worst_linf = 0, worst_agree = 1, total = 0;
  for (const CrfInstance& in : instances) {
    auto t0 = Clock::now();
    const MarginalField exact = meanfield_infer(in.unary, in.image, cp, InferenceMode::exact);
    const MarginalField fast = meanfield_infer(in.unary, in.image, cp, InferenceMode::fast);
    total += seconds_since(t0);
    double linf = 0;
    std::size_t agree = 0;
    const std::size_t n = exact.q.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double a = exact.q.data()[i], b = fast.q.data()[i];
      linf = std::max(linf, std::abs(a - b));
      agree += (a > 0.5) == (b > 0.5);
    }
    worst_linf = std::max(worst_linf, linf);
    worst_agree = std::min(worst_agree, static_cast<double>(agree) / n);
  }
  std::ostringstream d;
  d << "worst L_inf " << worst_linf << ", worst agreement " << worst_agree << ", " << total << " s";
  return {worst_linf <= 0.05 && worst_agree >= 0.99 && total < 60, d.str()};
}

// The energy after each iteration is recomputed by the direct oracle from the
// marginals of a run stopped at that iteration.
Outcome free_energy_descent() {
  CrfParams cp;
  const std::vector<CrfInstance> instances = crf_instances(96, 2, 17, cp);
  int violations = 0, steps = 0;
  double worst_rise = -1e300, worst_trace_gap = 0;
  for (const CrfInstance& in : instances) {
    MeanFieldTrace trace;
    cp.iterations = 10;
    meanfield_infer(in.unary, in.image, cp, InferenceMode::exact, &trace);
    std::vector<double> f{oracle::free_energy(in.unary.energy.fg, in.unary.energy.bg, in.image, cp,
                                              unary_marginals(in.unary).q)};
    for (int k = 1; k <= 10; ++k) {
      cp.iterations = k;
      const MarginalField q = meanfield_infer(in.unary, in.image, cp, InferenceMode::exact);
      f.push_back(oracle::free_energy(in.unary.energy.fg, in.unary.energy.bg, in.image, cp, q.q));
    }
    for (std::size_t k = 0; k < f.size() && k < trace.free_energy.size(); ++k) {
      worst_trace_gap = std::max(worst_trace_gap, std::abs(f[k] - trace.free_energy[k]));
    }
    for (std::size_t k = 1; k < f.size(); ++k) {
      ++steps;
      worst_rise = std::max(worst_rise, f[k] - f[k - 1]);
      violations += f[k] > f[k - 1] + 1e-6;
      if (k < trace.free_energy.size()) violations += trace.free_energy[k] > trace.free_energy[k - 1] + 1e-6;
    }
  }
  std::ostringstream d;
  d << violations << " rises over " << steps << " iterations, largest change " << worst_rise
    << ", trace vs direct gap " << worst_trace_gap;
  return {violations == 0 && steps > 0, d.str()};
}

BinaryMask strip(int x0, int x1) {
  BinaryMask m(10, 10, 0);
  for (int y = 0; y < 10; ++y) {
    for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
  }
  return m;
}

Outcome ap_oracle() {
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<int> n_img(1, 5), n_gt(0, 3), n_det(0, 6), coord(0, 9);
  std::uniform_real_distribution<double> score(0, 1);
  double worst = 0;
  for (int k = 0; k < 200; ++k) {
    std::vector<SegDetection> dets;
    std::vector<GroundTruth> gts;
    std::vector<oracle::RankedDetection> odets;
    std::vector<oracle::TruthMask> ogts;
    auto random_box = [&] {
      int a = coord(rng), b = coord(rng), c = coord(rng), d = coord(rng);
      BinaryMask m(10, 10, 0);
      for (int y = std::min(c, d); y <= std::max(c, d); ++y) {
        for (int x = std::min(a, b); x <= std::max(a, b); ++x) m.at(x, y) = 1;
      }
      return m;
    };
    const int images = n_img(rng);
    for (int i = 0; i < images; ++i) {
      const std::string id = "img" + std::to_string(i);
      for (int g = n_gt(rng); g > 0; --g) {
        const BinaryMask m = random_box();
        gts.push_back({id, m});
        ogts.push_back({id, m});
      }
      for (int d = n_det(rng); d > 0; --d) {
        const BinaryMask m = random_box();
        const double s = std::round(score(rng) * 20) / 20;  // ties included
        dets.push_back({id, m, s});
        odets.push_back({id, s, m});
      }
    }
    for (double thr : {0.5, 0.75}) {
      worst = std::max(worst, std::abs(average_precision(dets, gts, thr) - oracle::average_precision(odets, ogts, thr)));
    }
  }
  const std::vector<SegDetection> hand_dets{{"a", strip(0, 4), 0.9}, {"a", strip(6, 9), 0.8}, {"b", strip(5, 9), 0.7}};
  const std::vector<GroundTruth> hand_gts{{"a", strip(0, 4)}, {"b", strip(5, 9)}};
  const double hand = average_precision(hand_dets, hand_gts, 0.5);
  std::ostringstream d;
  d << "worst deviation " << worst << " over 200 sets, hand case " << hand;
  return {worst <= 1e-9 && std::abs(hand - 5.0 / 6.0) <= 1e-6, d.str()};
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "bsm");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream os, es;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), os, es);
  if (code != 0) std::fprintf(stderr, "%s", es.str().c_str());
  if (out) *out = os.str();
  return code;
}

Outcome end_to_end() {
  testing::TempDir dir;
  const std::string data = (dir / "data").string(), model = (dir / "model.json").string(),
                    folds = (dir / "folds.json").string(), seg = (dir / "seg").string();
  const auto t0 = Clock::now();
  if (cli({"--seed", "7", "synth", "-o", data, "-n", "30"}) != 0 ||
      cli({"--seed", "7", "folds", "--dataset", data, "--n-folds", "3", "-o", folds}) != 0 ||
      cli({"--jobs", "4", "train", "--dataset", data, "--folds", folds, "--fold", "0", "--model", model}) != 0 ||
      cli({"--jobs", "4", "segment", "--model", model, "--dataset", data, "--folds", folds, "--fold", "0", "-o",
           seg}) != 0) {
    return {false, "pipeline command failed"};
  }
  const double t = seconds_since(t0);

  const FoldSpec spec = cli::load_folds(folds);
  const std::vector<std::string> test_ids = spec.members(0);
  const nlohmann::json doc = nlohmann::json::parse(testing::read_file(dir / "seg/segmentations.json"));
  int detected = 0;
  double iou_sum = 0, union_iou_sum = 0;
  for (const nlohmann::json& img : doc.at("images")) {
    const std::string id = img.at("id");
    const BinaryMask gt = load_mask(dir / "data/masks" / (id + ".png"));
    const Rect box = mask_bbox(gt);
    const nlohmann::json& dets = img.at("detections");
    // Segmentation quality is that of the top detection's own mask; the
    // per-image union also holds any weaker false positives.
    if (!dets.empty()) {
      const double cx = dets[0].at("cx"), cy = dets[0].at("cy");
      detected += std::hypot(cx - box.cx(), cy - box.cy()) <= 0.1 * box.diagonal();
      iou_sum += iou(load_mask(dir / "seg" / dets[0].at("mask").get<std::string>()), gt);
    }
    union_iou_sum += iou(load_mask(dir / "seg" / img.at("mask").get<std::string>()), gt);
  }
  const std::size_t n = doc.at("images").size();
  const double rate = n ? static_cast<double>(detected) / n : 0, mean_iou = n ? iou_sum / n : 0;
  const double union_iou = n ? union_iou_sum / n : 0;
  std::ostringstream d;
  d << n << " test images (" << 30 - test_ids.size() << " train), detection rate " << rate << ", mean IoU "
    << mean_iou << " (per-image union " << union_iou << "), " << t << " s";
  return {n == test_ids.size() && n == 10 && rate >= 0.9 && mean_iou >= 0.75 && t < 300, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 shape descriptor signs", shape_signs},
      {"2 quantization oracle", quantization},
      {"3 vote mass conservation", vote_mass},
      {"4 mean-field fast vs exact", meanfield_equivalence},
      {"5 free energy descent", free_energy_descent},
      {"6 average precision oracle", ap_oracle},
      {"7 synthetic end to end", end_to_end},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf(
      "INFO criterion 8 benchmark mAP (informational, not run): published 0.39 TUD cars, 0.48 TUD cows, "
      "0.57 MSRC cow; see README for the tuning recipe\n");
  return failures == 0 ? 0 : 1;
}
