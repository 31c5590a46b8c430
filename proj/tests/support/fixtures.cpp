#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bsm::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("bsm_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

BinaryMask mask_from(int width, int height, const std::function<bool(double, double)>& inside) {
  BinaryMask m(width, height, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) m.at(x, y) = inside(x, y) ? 1 : 0;
  }
  return m;
}

GrayImage square_image(int size, int side) {
  GrayImage img(size, size, 0.0);
  const int x0 = (size - side) / 2;
  for (int y = x0; y < x0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) img.at(x, y) = 1.0;
  }
  return img;
}

namespace {

SiftDescriptor normalized(SiftDescriptor d) {
  const double n = d.norm();
  for (double& v : d.bins) v /= n;
  return d;
}

}  // namespace

SiftDescriptor random_descriptor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SiftDescriptor d;
  for (double& v : d.bins) v = u(rng);
  return normalized(d);
}

SiftDescriptor peaked_descriptor(int k, double spread, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, spread);
  SiftDescriptor d;
  for (double& v : d.bins) v = u(rng);
  d[k] += 1.0;
  return normalized(d);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Model toy_model(int codewords, int occurrences, const StrengthGrid& strengths) {
  Model m;
  m.class_name = "toy";
  m.mean_object_w = 40;
  m.mean_object_h = 30;
  m.mean_feature_scale = 3.5;
  m.training_images = 1;
  for (int c = 0; c < codewords; ++c) {
    Codeword cw;
    cw.center[c % kSiftLength] = 1.0;
    ShapeEntry entry;
    entry.strengths = strengths;
    entry.member_count = occurrences;
    cw.shape_codebook.push_back(entry);
    for (int o = 0; o < occurrences; ++o) {
      Occurrence occ;
      occ.dx = 5.0 * (o + 1);
      occ.dy = -3.0;
      occ.feat_scale = 1.0;
      occ.obj_w = 40;
      occ.obj_h = 30;
      cw.occurrences.push_back(occ);
    }
    m.codewords.push_back(std::move(cw));
  }
  return m;
}

}  // namespace bsm::testing
