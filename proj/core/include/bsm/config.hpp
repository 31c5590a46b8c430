#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bsm/codebook.hpp"
#include "bsm/detector.hpp"
#include "bsm/meanfield.hpp"
#include "bsm/synth.hpp"

namespace bsm {

inline constexpr int kConfigFormatVersion = 1;

struct Config {
  std::string class_name = "object";
  std::string dataset_dir;
  std::string model_path = "model.json";
  std::string output_dir = "out";

  ModelParams model;
  DetectionParams detection;
  CrfParams crf;

  int n_folds = 3;
  std::uint64_t fold_seed = 0;

  SynthParams synth;
  int synth_images = 30;
  std::uint64_t synth_seed = 7;

  int jobs = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const Config&) const = default;
};

std::string config_to_json(const Config& c);
/// Missing keys keep their defaults. Throws DataError on malformed text,
/// unknown keys or invalid values.
Config config_from_json(const std::string& text);
Config load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const Config& c);

}  // namespace bsm
