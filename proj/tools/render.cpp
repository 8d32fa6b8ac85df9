// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "render.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace actvae::cli {

Skeleton Skeleton::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Skeleton s;
  s.name = j.value("name", std::string("unnamed"));
  s.joints = j.at("joints").get<int>();
  if (s.joints < 1) throw std::invalid_argument("skeleton: joint count must be positive");
  for (const auto& b : j.at("bones")) {
    const auto pair = b.get<std::array<int, 2>>();
    for (int k : pair) {
      if (k < 0 || k >= s.joints) {
        throw std::invalid_argument("skeleton '" + s.name + "': bone joint " +
                                    std::to_string(k) + " out of range");
      }
    }
    s.bones.emplace_back(pair[0], pair[1]);
  }
  return s;
}

Skeleton Skeleton::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::optional<Skeleton> find_skeleton(const std::filesystem::path& dir, int joints) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    Skeleton s = Skeleton::load(f);
    if (s.joints == joints) return s;
  }
  return std::nullopt;
}

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw std::invalid_argument("image: empty canvas");
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < rgb.size(); i += 3) std::copy(fill.begin(), fill.end(), rgb.begin() + i);
}

Rgb Image::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {rgb.at(i), rgb.at(i + 1), rgb.at(i + 2)};
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  std::copy(c.begin(), c.end(), rgb.begin() + i);
}

namespace {

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    img.set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Image render_pose(const Pose& pixel_pose, FrameSize frame, const Skeleton& skeleton, int scale) {
  if (pixel_pose.normalized) throw std::invalid_argument("render: pose must be in pixels");
  if (pixel_pose.joints() != skeleton.joints) {
    throw std::invalid_argument("render: pose has " + std::to_string(pixel_pose.joints()) +
                                " joints, skeleton '" + skeleton.name + "' has " +
                                std::to_string(skeleton.joints));
  }
  if (scale < 1) throw std::invalid_argument("render: scale must be positive");
  Image img(frame.width * scale, frame.height * scale);
  std::vector<std::pair<int, int>> px;
  for (Eigen::Index j = 0; j < pixel_pose.joints(); ++j) {
    px.emplace_back(static_cast<int>(std::lround(pixel_pose.x(j) * scale)),
                    static_cast<int>(std::lround(pixel_pose.y(j) * scale)));
  }
  for (const auto& [a, b] : skeleton.bones) {
    draw_line(img, px[a].first, px[a].second, px[b].first, px[b].second, kBoneColor);
  }
  const int r = std::max(1, scale / 2);
  for (const auto& [x, y] : px)
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) img.set(x + dx, y + dy, kJointColor);
  return img;
}

Image filmstrip(const std::vector<Image>& frames, int gap) {
  if (frames.empty()) throw std::invalid_argument("filmstrip: no frames");
  int w = 0, h = 0;
  for (const auto& f : frames) {
    w += f.width;
    h = std::max(h, f.height);
  }
  w += gap * static_cast<int>(frames.size() - 1);
  Image out(w, h, kSeparatorColor);
  int x0 = 0;
  for (const auto& f : frames) {
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) out.set(x0 + x, y, f.at(x, y));
    x0 += f.width + gap;
  }
  return out;
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

Image decode_ppm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w < 1 || h < 1 || maxval != 255) throw std::runtime_error("ppm: bad header");
  in.get();
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw std::runtime_error("ppm: truncated pixel data");
  }
  return img;
}

}  // namespace actvae::cli
