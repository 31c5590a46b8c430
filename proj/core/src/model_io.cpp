#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bsm/codebook.hpp"
#include "json_params.hpp"

namespace bsm {

using nlohmann::json;

namespace {

json occurrence_to_json(const Occurrence& o) {
  return {{"dx", o.dx},         {"dy", o.dy},   {"feat_scale", o.feat_scale},
          {"obj_w", o.obj_w},   {"obj_h", o.obj_h}, {"shape_idx", o.shape_idx},
          {"source_image", o.source_image}, {"x", o.x}, {"y", o.y}};
}

Occurrence occurrence_from_json(const json& j) {
  Occurrence o;
  o.dx = j.at("dx");
  o.dy = j.at("dy");
  o.feat_scale = j.at("feat_scale");
  o.obj_w = j.at("obj_w");
  o.obj_h = j.at("obj_h");
  o.shape_idx = j.at("shape_idx");
  o.source_image = j.at("source_image");
  o.x = j.at("x");
  o.y = j.at("y");
  return o;
}

}  // namespace

std::string model_to_json(const Model& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["class_name"] = model.class_name;
  doc["params"] = model_params_to_json(model.params);
  doc["stats"] = {{"mean_object_w", model.mean_object_w},
                  {"mean_object_h", model.mean_object_h},
                  {"mean_feature_scale", model.mean_feature_scale},
                  {"training_images", model.training_images}};
  json cws = json::array();
  for (const Codeword& cw : model.codewords) {
    json c;
    c["center"] = cw.center.bins;
    json occ = json::array();
    for (const Occurrence& o : cw.occurrences) occ.push_back(occurrence_to_json(o));
    c["occurrences"] = std::move(occ);
    json shapes = json::array();
    for (const ShapeEntry& e : cw.shape_codebook) {
      shapes.push_back({{"bins", e.descriptor.bins},
                        {"strengths", e.strengths.upsilon},
                        {"member_count", e.member_count}});
    }
    c["shape_codebook"] = std::move(shapes);
    cws.push_back(std::move(c));
  }
  doc["codewords"] = std::move(cws);
  return doc.dump() + "\n";
}

Model model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw DataError("unsupported model format_version");
    }
    Model m;
    m.class_name = doc.at("class_name");
    m.params = model_params_from_json(doc.at("params"));
    const json& st = doc.at("stats");
    m.mean_object_w = st.at("mean_object_w");
    m.mean_object_h = st.at("mean_object_h");
    m.mean_feature_scale = st.at("mean_feature_scale");
    m.training_images = st.at("training_images");
    for (const json& c : doc.at("codewords")) {
      Codeword cw;
      cw.center.bins = c.at("center").get<decltype(cw.center.bins)>();
      for (const json& o : c.at("occurrences")) cw.occurrences.push_back(occurrence_from_json(o));
      for (const json& e : c.at("shape_codebook")) {
        ShapeEntry entry;
        entry.descriptor.bins = e.at("bins").get<decltype(entry.descriptor.bins)>();
        entry.strengths.upsilon = e.at("strengths").get<decltype(entry.strengths.upsilon)>();
        entry.member_count = e.at("member_count");
        cw.shape_codebook.push_back(entry);
      }
      for (const Occurrence& o : cw.occurrences) {
        if (o.shape_idx < 0 || o.shape_idx >= static_cast<int>(cw.shape_codebook.size())) {
          throw DataError("occurrence shape_idx out of range");
        }
      }
      m.codewords.push_back(std::move(cw));
    }
    m.params.validate();
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid model parameters: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << model_to_json(model);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace bsm
