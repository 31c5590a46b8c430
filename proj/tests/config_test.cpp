#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "bsm/config.hpp"
#include "fixtures.hpp"

namespace bsm {
namespace {

Config tweaked() {
  Config c;
  c.class_name = "cow";
  c.dataset_dir = "/data/cows";
  c.model.t = 0.65;
  c.model.beta = 0.35;
  c.model.base_size = 25;
  c.model.detector.max_keypoints = 700;
  c.model.sift.clamp = 0.25;
  c.detection.bandwidth_factor = 0.07;
  c.detection.refine_scales = {1.0, 2.0};
  c.detection.refine = false;
  c.crf.lambda_color = 0.25;
  c.crf.theta_alpha = 33.3;
  c.crf.iterations = 7;
  c.n_folds = 5;
  c.fold_seed = 12345678901234ULL;
  c.synth.shape = "rounded-square";
  c.synth_images = 11;
  c.jobs = 3;
  return c;
}

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(Config{}.validate()); }

TEST(Config, JsonRoundTrip) {
  const Config c = tweaked();
  const Config back = config_from_json(config_to_json(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, FileRoundTrip) {
  testing::TempDir dir;
  save_config(dir / "c.json", tweaked());
  const Config once = load_config(dir / "c.json");
  save_config(dir / "d.json", once);
  EXPECT_EQ(load_config(dir / "d.json"), tweaked());
}

TEST(Config, CarriesFormatVersion) {
  const auto j = nlohmann::json::parse(config_to_json(Config{}));
  EXPECT_EQ(j.at("format_version").get<int>(), kConfigFormatVersion);
}

TEST(Config, MissingKeysKeepDefaults) {
  const Config c = config_from_json(R"({"format_version": 1, "crf": {"iterations": 4}})");
  Config want;
  want.crf.iterations = 4;
  EXPECT_EQ(c, want);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_json(R"({"format_version": 1, "crf": {"iteratoins": 4}})"), DataError);
  EXPECT_THROW(config_from_json(R"({"format_version": 1, "model": {"beta": 1.5}})"), DataError);
  EXPECT_THROW(config_from_json(R"({"format_version": 2})"), DataError);
  EXPECT_THROW(config_from_json("{"), DataError);
  EXPECT_THROW(config_from_json(R"({"format_version": 1, "jobs": "many"})"), DataError);
}

TEST(Config, ValidateNamesField) {
  Config c;
  c.n_folds = 1;
  try {
    c.validate();
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("n_folds"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace bsm
