#include "bsm/image.hpp"

#include <algorithm>
#include <cmath>

namespace bsm {

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
  data_.assign(pixel_count() * 3, 0);
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
  if (data_.size() != pixel_count() * 3) {
    throw std::invalid_argument("rgb data size must equal width*height*3");
  }
}

double rect_iou(const Rect& a, const Rect& b) {
  const Rect inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
                   std::min(a.y1, b.y1)};
  const double i = inter.area();
  const double u = a.area() + b.area() - i;
  return u > 0 ? i / u : 0.0;
}

GrayImage to_gray(const RgbImage& img) {
  std::vector<double> out(img.pixel_count());
  const auto& d = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double l = 0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2];
    out[i] = std::clamp(l / 255.0, 0.0, 1.0);
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage mask_to_gray(const BinaryMask& mask) {
  std::vector<double> out(mask.size());
  std::transform(mask.data().begin(), mask.data().end(), out.begin(),
                 [](std::uint8_t v) { return static_cast<double>(v); });
  return GrayImage(mask.width(), mask.height(), std::move(out));
}

void gradient_plane(const std::vector<double>& p, int w, int h, std::vector<double>& dx,
                    std::vector<double>& dy) {
  dx.assign(p.size(), 0.0);
  dy.assign(p.size(), 0.0);
  auto at = [&](int x, int y) { return p[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (w > 1) {
        if (x == 0) dx[i] = at(1, y) - at(0, y);
        else if (x == w - 1) dx[i] = at(w - 1, y) - at(w - 2, y);
        else dx[i] = 0.5 * (at(x + 1, y) - at(x - 1, y));
      }
      if (h > 1) {
        if (y == 0) dy[i] = at(x, 1) - at(x, 0);
        else if (y == h - 1) dy[i] = at(x, h - 1) - at(x, h - 2);
        else dy[i] = 0.5 * (at(x, y + 1) - at(x, y - 1));
      }
    }
  }
}

std::pair<ScalarField, ScalarField> gradient(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) {
    throw std::invalid_argument("gradient requires an image of at least 3x3");
  }
  std::vector<double> dx, dy;
  gradient_plane(img.data(), img.width(), img.height(), dx, dy);
  return {ScalarField(img.width(), img.height(), std::move(dx)),
          ScalarField(img.width(), img.height(), std::move(dy))};
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

void blur_plane(std::vector<double>& plane, int w, int h, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(plane.size());
  std::vector<double> line;

  line.resize(w + 2 * r);
  for (int y = 0; y < h; ++y) {
    const double* row = plane.data() + static_cast<std::size_t>(y) * w;
    for (int i = 0; i < w + 2 * r; ++i) line[i] = row[std::clamp(i - r, 0, w - 1)];
    double* out = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int t = 0; t <= 2 * r; ++t) s += k[t] * line[x + t];
      out[x] = s;
    }
  }
  line.resize(h + 2 * r);
  for (int x = 0; x < w; ++x) {
    for (int i = 0; i < h + 2 * r; ++i) {
      line[i] = tmp[static_cast<std::size_t>(std::clamp(i - r, 0, h - 1)) * w + x];
    }
    for (int y = 0; y < h; ++y) {
      double s = 0;
      for (int t = 0; t <= 2 * r; ++t) s += k[t] * line[y + t];
      plane[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian_blur requires sigma > 0");
  std::vector<double> plane = img.data();
  blur_plane(plane, img.width(), img.height(), sigma);
  for (double& v : plane) v = std::clamp(v, 0.0, 1.0);
  return GrayImage(img.width(), img.height(), std::move(plane));
}

}  // namespace bsm
