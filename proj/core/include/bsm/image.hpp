#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bsm {

/// Raised for unreadable or undecodable files and other bad input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major single-channel raster. The tag type selects the value invariant
/// checked when constructing from a data vector.
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      throw std::invalid_argument("raster data size does not match dimensions");
    }
    for (const T& v : data_) {
      if (!Tag::valid(v)) throw std::invalid_argument(Tag::violation());
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  /// Edge-clamped read.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return at(x, y);
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Raster& other) const = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("raster dimensions must be >= 1");
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct GrayTag {
  static bool valid(double v) { return v >= 0.0 && v <= 1.0; }
  static const char* violation() { return "gray values must lie in [0,1]"; }
};
struct MaskTag {
  static bool valid(std::uint8_t v) { return v <= 1; }
  static const char* violation() { return "mask values must be 0 or 1"; }
};
struct FieldTag {
  static bool valid(double v) { return std::isfinite(v); }
  static const char* violation() { return "field values must be finite"; }
};

using GrayImage = Raster<double, GrayTag>;
using BinaryMask = Raster<std::uint8_t, MaskTag>;
using ScalarField = Raster<double, FieldTag>;

/// Interleaved 8-bit RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height);
  RgbImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const RgbImage& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Axis-aligned rectangle in continuous pixel coordinates, [x0,x1) x [y0,y1).
struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  static Rect centered(double cx, double cy, double w, double h) {
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  double cx() const { return (x0 + x1) / 2; }
  double cy() const { return (y0 + y1) / 2; }
  double diagonal() const { return std::hypot(width(), height()); }
  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  Rect scaled(double f) const { return centered(cx(), cy(), width() * f, height() * f); }

  bool operator==(const Rect&) const = default;
};

double rect_iou(const Rect& a, const Rect& b);

/// Luminance 0.299R + 0.587G + 0.114B, scaled to [0,1].
GrayImage to_gray(const RgbImage& img);
GrayImage mask_to_gray(const BinaryMask& mask);

/// Central differences, one-sided at the border. Requires width, height >= 3.
std::pair<ScalarField, ScalarField> gradient(const GrayImage& img);

/// Separable Gaussian convolution, kernel radius ceil(3 sigma), edge clamping.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Normalized truncated Gaussian taps for radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Raw-buffer variants used by the feature pipeline, where intermediate
/// scale-space values need not stay in [0,1].
void blur_plane(std::vector<double>& plane, int width, int height, double sigma);
void gradient_plane(const std::vector<double>& plane, int width, int height,
                    std::vector<double>& dx, std::vector<double>& dy);

// I/O. PNG is always available; JPEG when built with libjpeg.
RgbImage load_image(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const RgbImage& img);
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);
void save_gray(const std::filesystem::path& path, const GrayImage& img);

}  // namespace bsm
