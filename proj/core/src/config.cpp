#include "bsm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json_params.hpp"

namespace bsm {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw DataError(where_ + " must be an object");
  }

  template <typename T>
  Reader& get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return *this;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw DataError(where_ + "." + key + ": " + e.what());
    }
    return *this;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw DataError("unknown key " + where_ + "." + item.key());
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

json model_params_to_json(const ModelParams& p) {
  const DetectorParams& d = p.detector;
  return {{"t", p.t},
          {"beta", p.beta},
          {"base_size", p.base_size},
          {"detector",
           {{"harris_k", d.harris_k},
            {"levels_per_octave", d.levels_per_octave},
            {"octaves", d.octaves},
            {"sigma0", d.sigma0},
            {"rel_threshold", d.rel_threshold},
            {"derivation_ratio", d.derivation_ratio},
            {"dog_threshold", d.dog_threshold},
            {"edge_ratio", d.edge_ratio},
            {"merge_radius", d.merge_radius},
            {"max_keypoints", d.max_keypoints}}},
          {"sift", {{"patch_factor", p.sift.patch_factor}, {"clamp", p.sift.clamp}}}};
}

ModelParams model_params_from_json(const json& j) {
  ModelParams p;
  Reader r(j, "model");
  r.get("t", p.t).get("beta", p.beta).get("base_size", p.base_size);
  if (const json* d = r.child("detector")) {
    DetectorParams& dp = p.detector;
    Reader rd(*d, "model.detector");
    rd.get("harris_k", dp.harris_k)
        .get("levels_per_octave", dp.levels_per_octave)
        .get("octaves", dp.octaves)
        .get("sigma0", dp.sigma0)
        .get("rel_threshold", dp.rel_threshold)
        .get("derivation_ratio", dp.derivation_ratio)
        .get("dog_threshold", dp.dog_threshold)
        .get("edge_ratio", dp.edge_ratio)
        .get("merge_radius", dp.merge_radius)
        .get("max_keypoints", dp.max_keypoints);
    rd.finish();
  }
  if (const json* s = r.child("sift")) {
    Reader rs(*s, "model.sift");
    rs.get("patch_factor", p.sift.patch_factor).get("clamp", p.sift.clamp);
    rs.finish();
  }
  r.finish();
  return p;
}

json detection_params_to_json(const DetectionParams& p) {
  return {{"bandwidth_factor", p.bandwidth_factor},
          {"log_scale_bandwidth", p.log_scale_bandwidth},
          {"min_score_ratio", p.min_score_ratio},
          {"nms_iou", p.nms_iou},
          {"refine", p.refine},
          {"refine_stride", p.refine_stride},
          {"refine_scales", p.refine_scales},
          {"refine_radius", p.refine_radius},
          {"max_hypotheses", p.max_hypotheses}};
}

DetectionParams detection_params_from_json(const json& j) {
  DetectionParams p;
  Reader r(j, "detection");
  r.get("bandwidth_factor", p.bandwidth_factor)
      .get("log_scale_bandwidth", p.log_scale_bandwidth)
      .get("min_score_ratio", p.min_score_ratio)
      .get("nms_iou", p.nms_iou)
      .get("refine", p.refine)
      .get("refine_stride", p.refine_stride)
      .get("refine_scales", p.refine_scales)
      .get("refine_radius", p.refine_radius)
      .get("max_hypotheses", p.max_hypotheses);
  r.finish();
  return p;
}

json crf_params_to_json(const CrfParams& p) {
  return {{"lambda_shape", p.lambda_shape},
          {"lambda_color", p.lambda_color},
          {"lambda_roi", p.lambda_roi},
          {"w_appearance", p.w_appearance},
          {"w_smoothness", p.w_smoothness},
          {"theta_alpha", p.theta_alpha},
          {"theta_beta", p.theta_beta},
          {"theta_gamma", p.theta_gamma},
          {"iterations", p.iterations},
          {"kde_bandwidth", p.kde_bandwidth},
          {"seed_threshold", p.seed_threshold},
          {"min_seed_pixels", p.min_seed_pixels},
          {"roi_penalty", p.roi_penalty},
          {"roi_fg_factor", p.roi_fg_factor},
          {"bg_outside_factor", p.bg_outside_factor},
          {"grid_oversampling", p.grid_oversampling}};
}

CrfParams crf_params_from_json(const json& j) {
  CrfParams p;
  Reader r(j, "crf");
  r.get("lambda_shape", p.lambda_shape)
      .get("lambda_color", p.lambda_color)
      .get("lambda_roi", p.lambda_roi)
      .get("w_appearance", p.w_appearance)
      .get("w_smoothness", p.w_smoothness)
      .get("theta_alpha", p.theta_alpha)
      .get("theta_beta", p.theta_beta)
      .get("theta_gamma", p.theta_gamma)
      .get("iterations", p.iterations)
      .get("kde_bandwidth", p.kde_bandwidth)
      .get("seed_threshold", p.seed_threshold)
      .get("min_seed_pixels", p.min_seed_pixels)
      .get("roi_penalty", p.roi_penalty)
      .get("roi_fg_factor", p.roi_fg_factor)
      .get("bg_outside_factor", p.bg_outside_factor)
      .get("grid_oversampling", p.grid_oversampling);
  r.finish();
  return p;
}

json synth_params_to_json(const SynthParams& p) {
  return {{"width", p.width},
          {"height", p.height},
          {"shape", p.shape},
          {"object_radius", p.object_radius},
          {"clutter_shapes", p.clutter_shapes},
          {"noise", p.noise}};
}

SynthParams synth_params_from_json(const json& j) {
  SynthParams p;
  Reader r(j, "synth");
  r.get("width", p.width)
      .get("height", p.height)
      .get("shape", p.shape)
      .get("object_radius", p.object_radius)
      .get("clutter_shapes", p.clutter_shapes)
      .get("noise", p.noise);
  r.finish();
  return p;
}

void Config::validate() const {
  if (class_name.empty()) throw std::invalid_argument("class_name must not be empty");
  model.validate();
  detection.validate();
  crf.validate();
  synth.validate();
  if (n_folds < 2) throw std::invalid_argument("folds.n_folds must be >= 2");
  if (synth_images < 1) throw std::invalid_argument("synth.n_images must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

std::string config_to_json(const Config& c) {
  json synth = synth_params_to_json(c.synth);
  synth["n_images"] = c.synth_images;
  synth["seed"] = c.synth_seed;
  const json doc = {{"format_version", kConfigFormatVersion},
                    {"class_name", c.class_name},
                    {"paths", {{"dataset", c.dataset_dir}, {"model", c.model_path}, {"output", c.output_dir}}},
                    {"model", model_params_to_json(c.model)},
                    {"detection", detection_params_to_json(c.detection)},
                    {"crf", crf_params_to_json(c.crf)},
                    {"folds", {{"n_folds", c.n_folds}, {"seed", c.fold_seed}}},
                    {"synth", synth},
                    {"jobs", c.jobs}};
  return doc.dump(2) + "\n";
}

Config config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  Config c;
  Reader r(doc, "config");
  int version = kConfigFormatVersion;
  r.get("format_version", version);
  if (version != kConfigFormatVersion) {
    throw DataError("unsupported config format_version " + std::to_string(version));
  }
  r.get("class_name", c.class_name).get("jobs", c.jobs);
  if (const json* p = r.child("paths")) {
    Reader rp(*p, "paths");
    rp.get("dataset", c.dataset_dir).get("model", c.model_path).get("output", c.output_dir);
    rp.finish();
  }
  if (const json* m = r.child("model")) c.model = model_params_from_json(*m);
  if (const json* d = r.child("detection")) c.detection = detection_params_from_json(*d);
  if (const json* k = r.child("crf")) c.crf = crf_params_from_json(*k);
  if (const json* f = r.child("folds")) {
    Reader rf(*f, "folds");
    rf.get("n_folds", c.n_folds).get("seed", c.fold_seed);
    rf.finish();
  }
  if (const json* s = r.child("synth")) {
    json rest = *s;
    if (rest.is_object()) {
      Reader rs(rest, "synth");
      rs.get("n_images", c.synth_images).get("seed", c.synth_seed);
      rest.erase("n_images");
      rest.erase("seed");
    }
    c.synth = synth_params_from_json(rest);
  }
  r.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid config: ") + e.what());
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const Config& c) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write config " + path.string());
  f << config_to_json(c);
  if (!f) throw DataError("cannot write config " + path.string());
}

}  // namespace bsm
