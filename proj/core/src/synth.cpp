#include "bsm/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <stdexcept>

namespace bsm {

namespace {

constexpr int kSynthFormatVersion = 1;

// Distribution conversions are written out so output does not depend on the
// standard library's distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double normal() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

using Color = std::array<double, 3>;

bool inside_object(const SynthParams& p, double u, double v) {
  const double r = p.object_radius;
  if (p.shape == "rounded-square") {
    const double corner = r / 3;
    const double ex = std::max(std::abs(u) - (r - corner), 0.0);
    const double ey = std::max(std::abs(v) - (r - corner), 0.0);
    return std::abs(u) <= r && std::abs(v) <= r && ex * ex + ey * ey <= corner * corner;
  }
  if (u * u + v * v > r * r) return false;
  // Wedge notch opening upward, 25 degrees either side of -y.
  const double angle = std::atan2(u, -v);
  return !(std::abs(angle) < 25 * std::numbers::pi / 180 && u * u + v * v > 0.16 * r * r);
}

struct Patch {
  double u, v, size;
  bool round;
  Color color;
};

struct Texture {
  Color base;
  std::vector<Patch> patches;
};

Texture object_texture(const SynthParams& p, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Texture t;
  t.base = {rng.uniform(200, 235), rng.uniform(110, 140), rng.uniform(30, 60)};
  const std::array<Color, 4> palette{{{90, 40, 20}, {250, 225, 90}, {245, 240, 225}, {170, 30, 60}}};
  for (int k = 0; k < 10; ++k) {
    Patch patch;
    const double rad = p.object_radius * 0.75 * std::sqrt(rng.uniform());
    const double ang = rng.uniform(0, 2 * std::numbers::pi);
    patch.u = rad * std::cos(ang);
    patch.v = rad * std::sin(ang);
    patch.size = rng.uniform(2.5, 5.5) * p.object_radius / 26.0;
    patch.round = rng.uniform() < 0.5;
    patch.color = palette[k % palette.size()];
    t.patches.push_back(patch);
  }
  return t;
}

Color object_color(const Texture& t, double u, double v) {
  Color c = t.base;
  for (const Patch& p : t.patches) {
    const double du = u - p.u, dv = v - p.v;
    const bool hit = p.round ? du * du + dv * dv <= p.size * p.size
                             : std::abs(du) <= p.size && std::abs(dv) <= p.size;
    if (hit) c = p.color;
  }
  return c;
}

}  // namespace

void SynthParams::validate() const {
  if (shape != "notched-disk" && shape != "rounded-square") {
    throw std::invalid_argument("synth shape must be notched-disk or rounded-square");
  }
  if (object_radius < 4) throw std::invalid_argument("object_radius must be >= 4");
  if (width < 2 * object_radius + 8 || height < 2 * object_radius + 8) {
    throw std::invalid_argument("synthetic image too small for the object");
  }
  if (clutter_shapes < 0) throw std::invalid_argument("clutter_shapes must be >= 0");
  if (!(noise >= 0)) throw std::invalid_argument("noise must be >= 0");
}

BinaryMask synth_object_mask(const SynthParams& params, int width, int height, int cx, int cy) {
  BinaryMask mask(width, height, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) mask.at(x, y) = inside_object(params, x - cx, y - cy) ? 1 : 0;
  }
  return mask;
}

std::vector<SynthSample> generate_synthetic(const SynthParams& params, int n, std::uint64_t seed) {
  params.validate();
  if (n < 1) throw std::invalid_argument("synthetic image count must be >= 1");
  const Texture texture = object_texture(params, seed);
  Rng rng(seed);
  const int w = params.width, h = params.height, r = params.object_radius;
  std::vector<SynthSample> out;
  for (int k = 0; k < n; ++k) {
    SynthSample s;
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03d", k);
    s.id = id;
    s.cx = rng.integer(r + 3, w - r - 4);
    s.cy = rng.integer(r + 3, h - r - 4);

    std::vector<Color> px(static_cast<std::size_t>(w) * h);
    const Color bg0{rng.uniform(40, 110), rng.uniform(80, 150), rng.uniform(100, 170)};
    const double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double shade = gx * (x - w / 2.0) + gy * (y - h / 2.0);
        px[static_cast<std::size_t>(y) * w + x] = {bg0[0] + shade, bg0[1] + shade, bg0[2] + shade};
      }
    }
    for (int c = 0; c < params.clutter_shapes; ++c) {
      const double x0 = rng.uniform(-10, w), y0 = rng.uniform(-10, h);
      const double sw = rng.uniform(6, 30), sh = rng.uniform(6, 30);
      const bool ellipse = rng.uniform() < 0.5;
      const bool gray = rng.uniform() < 0.3;
      const double g = rng.uniform(30, 200);
      const Color col = gray ? Color{g, g, g}
                             : Color{rng.uniform(20, 110), rng.uniform(60, 200), rng.uniform(80, 230)};
      for (int y = std::max(0, static_cast<int>(y0)); y < std::min(h, static_cast<int>(y0 + sh) + 1); ++y) {
        for (int x = std::max(0, static_cast<int>(x0)); x < std::min(w, static_cast<int>(x0 + sw) + 1); ++x) {
          if (ellipse) {
            const double du = (x - x0 - sw / 2) / (sw / 2), dv = (y - y0 - sh / 2) / (sh / 2);
            if (du * du + dv * dv > 1) continue;
          } else if (x > x0 + sw || y > y0 + sh) {
            continue;
          }
          px[static_cast<std::size_t>(y) * w + x] = col;
        }
      }
    }

    s.mask = synth_object_mask(params, w, h, s.cx, s.cy);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (s.mask.at(x, y)) px[static_cast<std::size_t>(y) * w + x] = object_color(texture, x - s.cx, y - s.cy);
      }
    }
    s.image = RgbImage(w, h);
    for (std::size_t i = 0; i < px.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        const double v = px[i][c] + params.noise * rng.normal();
        s.image.data()[3 * i + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_synthetic_dataset(const std::filesystem::path& dir, const std::vector<SynthSample>& samples,
                             const SynthParams& params, std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (!ec) std::filesystem::create_directories(dir / "masks", ec);
  if (ec) throw DataError("cannot create dataset directory " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format_version"] = kSynthFormatVersion;
  manifest["generator"] = {{"shape", params.shape},
                           {"width", params.width},
                           {"height", params.height},
                           {"object_radius", params.object_radius},
                           {"clutter_shapes", params.clutter_shapes},
                           {"noise", params.noise},
                           {"seed", seed}};
  nlohmann::json list = nlohmann::json::array();
  for (const SynthSample& s : samples) {
    save_image(dir / "images" / (s.id + ".png"), s.image);
    save_mask(dir / "masks" / (s.id + ".png"), s.mask);
    list.push_back({{"id", s.id},
                    {"image", "images/" + s.id + ".png"},
                    {"mask", "masks/" + s.id + ".png"},
                    {"center", {s.cx, s.cy}}});
  }
  manifest["samples"] = list;
  std::ofstream f(dir / "manifest.json");
  f << manifest.dump(2) << '\n';
  if (!f) throw DataError("cannot write " + (dir / "manifest.json").string());
}

}  // namespace bsm
