#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "atx/common.hpp"
#include "atx/scene_io.hpp"

namespace atx {

using Rgb = std::array<std::uint8_t, 3>;

struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < rgb.size(); i += 3) std::copy(fill.begin(), fill.end(), rgb.begin() + i);
  }
  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[i] = c[0], rgb[i + 1] = c[1], rgb[i + 2] = c[2];
  }
  Rgb get(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

inline std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

inline Image decode_ppm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  if (magic != "P6" || w <= 0 || h <= 0 || maxv != 255) throw Error(Stage::Input, "not a binary 8-bit PPM");
  in.get();
  Image img(w, h, {0, 0, 0});
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) throw Error(Stage::Input, "truncated PPM");
  return img;
}

/// Stable distinct-ish color for a label; -1 (open space) is light grey.
inline Rgb label_color(int label) {
  if (label < 0) return {215, 215, 215};
  const std::uint64_t h = mix64(static_cast<std::uint64_t>(label) + 17);
  return {static_cast<std::uint8_t>(60 + h % 160), static_cast<std::uint8_t>(60 + (h >> 8) % 160),
          static_cast<std::uint8_t>(60 + (h >> 16) % 160)};
}

inline Rgb trajectory_color(std::size_t k) {
  static const Rgb palette[] = {{220, 20, 20}, {20, 60, 220}, {20, 160, 40}, {200, 120, 0}, {150, 0, 170}, {0, 150, 150}};
  return palette[k % 6];
}

struct PlotInput {
  std::vector<const Scene*> scenes;
  std::vector<std::vector<int>> labels;  // optional per-scene point labels (cluster ids); empty = instance ids
  std::vector<const Trajectory*> trajectories;
};

namespace detail {

struct Frame {
  Vec2 lo, hi;
  int width, height, margin;
  double scale;
  std::pair<double, double> pixel(const Vec3& p) const {
    const Vec2 q = xz(p);
    return {margin + (q.x() - lo.x()) * scale, margin + (hi.y() - q.y()) * scale};
  }
};

inline Frame make_frame(const PlotInput& in, int width) {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  auto grow = [&](const Vec3& p) { lo = lo.cwiseMin(xz(p)), hi = hi.cwiseMax(xz(p)); };
  for (const auto* s : in.scenes)
    for (const auto& p : s->points) grow(p);
  for (const auto* t : in.trajectories)
    for (const auto& p : t->points) grow(p);
  if (!std::isfinite(lo.x())) lo = Vec2::Zero(), hi = Vec2::Ones();
  const Vec2 ext = (hi - lo).cwiseMax(1e-6);
  Frame f{lo, hi, width, 0, 10, 0.0};
  f.scale = (width - 2.0 * f.margin) / ext.x();
  f.height = static_cast<int>(std::ceil(ext.y() * f.scale)) + 2 * f.margin;
  return f;
}

inline void draw_line(Image& img, double x0, double y0, double x1, double y1, Rgb c) {
  const int n = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0))), y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) img.set(x + dx, y + dy, c);
  }
}

}  // namespace detail

/// Top-down XZ raster: scene points colored by label, trajectories drawn
/// as thick polylines on top.
inline Image render_topdown(const PlotInput& in, int width = 800) {
  const auto f = detail::make_frame(in, width);
  Image img(f.width, f.height, {255, 255, 255});
  for (std::size_t s = 0; s < in.scenes.size(); ++s) {
    const Scene& sc = *in.scenes[s];
    const bool custom = s < in.labels.size() && in.labels[s].size() == sc.size();
    for (std::size_t i = 0; i < sc.size(); ++i) {
      const int label = custom ? (sc.is_open(i) ? -1 : in.labels[s][i]) : sc.instance_id[i];
      const auto [x, y] = f.pixel(sc.points[i]);
      img.set(static_cast<int>(x), static_cast<int>(y), label_color(label));
    }
  }
  for (std::size_t k = 0; k < in.trajectories.size(); ++k) {
    const auto& pts = in.trajectories[k]->points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const auto [x0, y0] = f.pixel(pts[i]);
      const auto [x1, y1] = f.pixel(pts[i + 1]);
      detail::draw_line(img, x0, y0, x1, y1, trajectory_color(k));
    }
  }
  return img;
}

inline std::string render_svg(const PlotInput& in, int width = 800) {
  const auto f = detail::make_frame(in, width);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto hex = [](Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
    return std::string(buf);
  };
  for (std::size_t s = 0; s < in.scenes.size(); ++s) {
    const Scene& sc = *in.scenes[s];
    const bool custom = s < in.labels.size() && in.labels[s].size() == sc.size();
    for (std::size_t i = 0; i < sc.size(); ++i) {
      const int label = custom ? (sc.is_open(i) ? -1 : in.labels[s][i]) : sc.instance_id[i];
      const auto [x, y] = f.pixel(sc.points[i]);
      os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"1\" fill=\"" << hex(label_color(label)) << "\"/>\n";
    }
  }
  for (std::size_t k = 0; k < in.trajectories.size(); ++k) {
    os << "<polyline fill=\"none\" stroke-width=\"3\" stroke=\"" << hex(trajectory_color(k)) << "\" points=\"";
    for (const auto& p : in.trajectories[k]->points) {
      const auto [x, y] = f.pixel(p);
      os << x << "," << y << " ";
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Writes SVG when `path` ends in ".svg", binary PPM otherwise.
inline void write_plot(const std::string& path, const PlotInput& in, int width = 800) {
  const bool svg = path.size() >= 4 && path.compare(path.size() - 4, 4, ".svg") == 0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Stage::Input, "cannot write " + path);
  out << (svg ? render_svg(in, width) : encode_ppm(render_topdown(in, width)));
  if (!out) throw Error(Stage::Input, "write failed: " + path);
}

}  // namespace atx
