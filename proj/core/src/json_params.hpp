#pragma once

#include <nlohmann/json.hpp>

#include "bsm/codebook.hpp"
#include "bsm/detector.hpp"
#include "bsm/meanfield.hpp"
#include "bsm/synth.hpp"

namespace bsm {

// Readers start from defaults, so absent keys keep their default values;
// unknown keys raise DataError.
nlohmann::json model_params_to_json(const ModelParams& p);
ModelParams model_params_from_json(const nlohmann::json& j);
nlohmann::json detection_params_to_json(const DetectionParams& p);
DetectionParams detection_params_from_json(const nlohmann::json& j);
nlohmann::json crf_params_to_json(const CrfParams& p);
CrfParams crf_params_from_json(const nlohmann::json& j);
nlohmann::json synth_params_to_json(const SynthParams& p);
SynthParams synth_params_from_json(const nlohmann::json& j);

}  // namespace bsm
