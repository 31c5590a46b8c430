#include "bsm/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "bsm/cli/dataset.hpp"
#include "bsm/codebook.hpp"
#include "bsm/detector.hpp"
#include "bsm/segmenter.hpp"
#include "bsm/synth.hpp"

namespace bsm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Item {
  std::string id;
  fs::path image;
  fs::path mask;
};

// Runs fn(0..n-1) on up to `jobs` threads. If several calls throw, the
// exception of the lowest index is rethrown, so failures are reproducible.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(jobs, 1), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  f << doc.dump(2) << '\n';
  if (!f) throw DataError("cannot write " + path.string());
}

void check_version(const json& doc, const fs::path& path) {
  if (!doc.is_object() || doc.value("format_version", -1) != kFileFormatVersion) {
    throw DataError(path.string() + ": missing or unsupported format_version");
  }
}

std::vector<Item> resolve(const RunOptions& opt, const ImageSelection& sel, bool require_masks, bool holdout) {
  if (sel.fold >= 0 && sel.folds.empty()) throw std::invalid_argument("--fold needs --folds");
  std::vector<Item> items;
  if (!sel.images.empty()) {
    if (sel.fold >= 0) throw std::invalid_argument("--fold applies to a dataset, not to image files");
    std::set<std::string> seen;
    for (const fs::path& p : sel.images) {
      Item it{p.stem().string(), p, {}};
      if (!seen.insert(it.id).second) throw DataError("duplicate image basename " + it.id);
      items.push_back(std::move(it));
    }
    return items;
  }
  const fs::path root = sel.dataset.empty() ? fs::path(opt.config.dataset_dir) : sel.dataset;
  if (root.empty()) throw std::invalid_argument("no dataset or images given");
  const DatasetLayout layout = scan_dataset(root, require_masks);
  FoldSpec folds;
  if (sel.fold >= 0) {
    folds = load_folds(sel.folds);
    if (sel.fold >= folds.n_folds) throw std::invalid_argument("--fold is out of range for " + sel.folds.string());
  }
  for (const DatasetEntry& e : layout.entries) {
    if (sel.fold >= 0) {
      const auto f = folds.fold_of.find(e.id);
      if (f == folds.fold_of.end()) throw DataError("image " + e.id + " is missing from " + sel.folds.string());
      if ((f->second == sel.fold) == holdout) continue;
    }
    items.push_back({e.id, e.image, e.mask});
  }
  if (items.empty()) throw DataError("image selection is empty in " + root.string());
  return items;
}

json hypothesis_to_json(const Hypothesis& h) {
  return {{"cx", h.cx},
          {"cy", h.cy},
          {"scale", h.s},
          {"score", h.score},
          {"roi", {h.roi.x0, h.roi.y0, h.roi.x1, h.roi.y1}},
          {"contributors", h.contributors.size()},
          {"refined", h.refined}};
}

}  // namespace

FoldSpec load_folds(const fs::path& path) {
  const json doc = read_json(path);
  check_version(doc, path);
  FoldSpec spec;
  try {
    spec.n_folds = doc.at("n_folds");
    spec.fold_of = doc.at("assignments").get<std::map<std::string, int>>();
    spec.groups = doc.at("groups").get<std::vector<std::vector<std::string>>>();
    spec.validate();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return spec;
}

void save_folds(const fs::path& path, const FoldSpec& spec, std::uint64_t seed) {
  write_json(path, {{"format_version", kFileFormatVersion},
                    {"n_folds", spec.n_folds},
                    {"seed", seed},
                    {"assignments", spec.fold_of},
                    {"groups", spec.groups}});
}

void cmd_init_config(const fs::path& out, std::ostream& os) {
  const Config defaults;
  if (out.empty()) {
    os << config_to_json(defaults);
  } else {
    save_config(out, defaults);
    os << "wrote " << out.string() << '\n';
  }
}

void cmd_train(const RunOptions& opt, const ImageSelection& sel, const fs::path& model_out, std::ostream& os) {
  const std::vector<Item> items = resolve(opt, sel, true, true);
  std::vector<TrainingSample> samples(items.size());
  parallel_for(items.size(), opt.jobs, [&](std::size_t i) {
    const RgbImage img = load_image(items[i].image);
    const BinaryMask mask = load_mask(items[i].mask);
    if (img.width() != mask.width() || img.height() != mask.height()) {
      throw DataError("mask size differs from image size: " + items[i].mask.string());
    }
    Rect box;
    try {
      box = mask_bbox(mask);
    } catch (const DataError&) {
      throw DataError("mask has no foreground pixels: " + items[i].mask.string());
    }
    samples[i] = {items[i].id, to_gray(img), mask, box};
  });
  TrainingStats stats;
  const Model model = build_model(samples, opt.config.model, opt.config.class_name, &stats);
  const fs::path out = model_out.empty() ? fs::path(opt.config.model_path) : model_out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_model(out, model);
  os << "trained on " << samples.size() << " images\n";
  os << "keypoints: " << stats.detected_keypoints << " detected, " << stats.kept_keypoints << " kept\n";
  os << "codewords: " << model.codewords.size() << '\n';
  os << "occurrences: " << model.occurrence_count() << '\n';
  os << "shape codebook sizes:";
  for (const Codeword& cw : model.codewords) os << ' ' << cw.shape_codebook.size();
  os << "\nwrote " << out.string() << '\n';
}

void cmd_detect(const RunOptions& opt, const fs::path& model_path, const ImageSelection& sel, const fs::path& out,
                std::ostream& os, std::ostream&) {
  const Model model = load_model(model_path.empty() ? fs::path(opt.config.model_path) : model_path);
  const std::vector<Item> items = resolve(opt, sel, false, false);
  std::vector<json> results(items.size());
  parallel_for(items.size(), opt.jobs, [&](std::size_t i) {
    const RgbImage img = load_image(items[i].image);
    json hyps = json::array();
    for (const Hypothesis& h : detect(to_gray(img), model, opt.config.detection)) hyps.push_back(hypothesis_to_json(h));
    results[i] = {{"id", items[i].id},
                  {"image", items[i].image.string()},
                  {"width", img.width()},
                  {"height", img.height()},
                  {"hypotheses", hyps}};
  });
  const fs::path path = out.empty() ? fs::path(opt.config.output_dir) / "detections.json" : out;
  write_json(path, {{"format_version", kFileFormatVersion}, {"class_name", model.class_name}, {"images", results}});
  for (const json& r : results) os << r["id"].get<std::string>() << ": " << r["hypotheses"].size() << " hypotheses\n";
  os << "wrote " << path.string() << '\n';
}

void cmd_segment(const RunOptions& opt, const fs::path& model_path, const ImageSelection& sel, const fs::path& out_dir,
                 std::ostream& os, std::ostream& err) {
  const Model model = load_model(model_path.empty() ? fs::path(opt.config.model_path) : model_path);
  const std::vector<Item> items = resolve(opt, sel, false, false);
  const fs::path dir = out_dir.empty() ? fs::path(opt.config.output_dir) : out_dir;
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "instances");
  if (opt.debug) fs::create_directories(dir / "debug");

  std::vector<json> results(items.size());
  std::vector<std::vector<std::string>> warnings(items.size());
  parallel_for(items.size(), opt.jobs, [&](std::size_t i) {
    const Item& it = items[i];
    const RgbImage img = load_image(it.image);
    const std::vector<Hypothesis> hyps = detect(to_gray(img), model, opt.config.detection);
    BinaryMask merged(img.width(), img.height(), 0);
    json dets = json::array();
    for (std::size_t k = 0; k < hyps.size(); ++k) {
      Segmentation seg = segment_detailed(img, hyps[k], model, opt.config.crf);
      for (const std::string& w : seg.warnings) warnings[i].push_back("hypothesis " + std::to_string(k) + ": " + w);
      for (std::size_t p = 0; p < merged.size(); ++p) merged.data()[p] |= seg.mask.data()[p];
      const std::string name = it.id + "_" + std::to_string(k) + ".png";
      save_mask(dir / "instances" / name, seg.mask);
      if (opt.debug) {
        const std::string stem = it.id + "_" + std::to_string(k);
        save_image(dir / "debug" / (stem + "_likelihood.png"), likelihood_heatmap(seg.likelihood));
        save_image(dir / "debug" / (stem + "_overlay.png"), likelihood_overlay(img, seg.likelihood));
      }
      json d = hypothesis_to_json(hyps[k]);
      d["mask"] = "instances/" + name;
      dets.push_back(d);
    }
    save_mask(dir / "masks" / (it.id + ".png"), merged);
    results[i] = {{"id", it.id},
                  {"image", it.image.string()},
                  {"width", img.width()},
                  {"height", img.height()},
                  {"mask", "masks/" + it.id + ".png"},
                  {"detections", dets}};
  });
  write_json(dir / "segmentations.json",
             {{"format_version", kFileFormatVersion}, {"class_name", model.class_name}, {"images", results}});
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (const std::string& w : warnings[i]) err << "warning: " << items[i].id << ": " << w << '\n';
    os << items[i].id << ": " << results[i]["detections"].size() << " objects\n";
  }
  os << "wrote " << (dir / "segmentations.json").string() << '\n';
}

void cmd_eval(const RunOptions&, const std::vector<fs::path>& pred_dirs, const std::vector<fs::path>& gt_dirs,
              const fs::path& out, std::ostream& os) {
  if (pred_dirs.empty()) throw std::invalid_argument("eval needs at least one --pred directory");
  if (pred_dirs.size() != gt_dirs.size()) throw std::invalid_argument("give one --gt dataset per --pred directory");
  json classes = json::array();
  double sum_ap50 = 0, sum_map = 0;
  for (std::size_t c = 0; c < pred_dirs.size(); ++c) {
    const fs::path manifest = pred_dirs[c] / "segmentations.json";
    const json doc = read_json(manifest);
    check_version(doc, manifest);
    const DatasetLayout gt_layout = scan_dataset(gt_dirs[c], false);
    std::map<std::string, const DatasetEntry*> gt_by_id;
    for (const DatasetEntry& e : gt_layout.entries) gt_by_id[e.id] = &e;

    std::vector<SegDetection> dets;
    std::vector<GroundTruth> gts;
    std::string class_name;
    try {
      class_name = doc.at("class_name");
      for (const json& img : doc.at("images")) {
        const std::string id = img.at("id");
        const auto it = gt_by_id.find(id);
        if (it == gt_by_id.end()) throw DataError("prediction for image " + id + " has no ground truth in " + gt_dirs[c].string());
        if (it->second->mask.empty()) throw DataError("no ground-truth mask for image " + id);
        BinaryMask gt = load_mask(it->second->mask);
        const bool has_object = std::any_of(gt.data().begin(), gt.data().end(), [](std::uint8_t v) { return v != 0; });
        for (const json& d : img.at("detections")) {
          BinaryMask m = load_mask(pred_dirs[c] / d.at("mask").get<std::string>());
          if (m.width() != gt.width() || m.height() != gt.height()) {
            throw DataError("predicted mask size differs from ground truth for image " + id);
          }
          dets.push_back({id, std::move(m), d.at("score").get<double>()});
        }
        if (has_object) gts.push_back({id, std::move(gt)});
      }
    } catch (const json::exception& e) {
      throw DataError(manifest.string() + ": " + e.what());
    }
    const EvalSummary s = summarize(dets, gts);
    sum_ap50 += s.ap50;
    sum_map += s.map;
    classes.push_back({{"class_name", class_name},
                       {"ap50", s.ap50},
                       {"map", s.map},
                       {"mean_iou", s.mean_iou},
                       {"detections", s.detections},
                       {"ground_truths", s.ground_truths},
                       {"true_positives", s.true_positives}});
    os << std::fixed << std::setprecision(4) << class_name << ": AP@0.5 " << s.ap50 << "  mAP@[.5:.95] " << s.map
       << "  mean IoU " << s.mean_iou << "  (" << s.true_positives << "/" << s.ground_truths << " matched, "
       << s.detections << " detections)\n";
  }
  const double n = static_cast<double>(pred_dirs.size());
  const json doc = {{"format_version", kFileFormatVersion},
                    {"iou_thresholds", coco_thresholds()},
                    {"classes", classes},
                    {"mean", {{"ap50", sum_ap50 / n}, {"map", sum_map / n}}}};
  if (!out.empty()) {
    write_json(out, doc);
    os << "wrote " << out.string() << '\n';
  }
  os << std::fixed << std::setprecision(4) << "mean: AP@0.5 " << sum_ap50 / n << "  mAP@[.5:.95] " << sum_map / n << '\n';
}

void cmd_folds(const RunOptions& opt, const fs::path& dataset, int n_folds, std::uint64_t seed, const fs::path& out,
               std::ostream& os) {
  const fs::path root = dataset.empty() ? fs::path(opt.config.dataset_dir) : dataset;
  if (root.empty()) throw std::invalid_argument("no dataset given");
  const DatasetLayout layout = scan_dataset(root, false);
  std::vector<std::string> ids;
  for (const DatasetEntry& e : layout.entries) ids.push_back(e.id);
  const FoldSpec spec = make_folds(ids, n_folds, layout.pairs, seed);
  const fs::path path = out.empty() ? fs::path(opt.config.output_dir) / "folds.json" : out;
  save_folds(path, spec, seed);
  for (int f = 0; f < spec.n_folds; ++f) os << "fold " << f << ": " << spec.members(f).size() << " images\n";
  os << "wrote " << path.string() << '\n';
}

void cmd_synth(const RunOptions& opt, const fs::path& out_dir, int n_images, std::uint64_t seed, std::ostream& os) {
  const fs::path dir = out_dir.empty() ? fs::path(opt.config.output_dir) : out_dir;
  const std::vector<SynthSample> samples = generate_synthetic(opt.config.synth, n_images, seed);
  write_synthetic_dataset(dir, samples, opt.config.synth, seed);
  os << "wrote " << samples.size() << " " << opt.config.synth.shape << " images to " << dir.string() << '\n';
}

}  // namespace bsm::cli
