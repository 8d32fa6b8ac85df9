// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "actvae/data.hpp"

namespace actvae::cli {

/// Joint connectivity for stick-figure drawing.
struct Skeleton {
  std::string name;
  int joints = 0;
  std::vector<std::pair<int, int>> bones;

  static Skeleton from_json(const std::string& text);
  static Skeleton load(const std::filesystem::path& path);
};

/// First skeleton file in `dir` whose joint count is `joints`.
std::optional<Skeleton> find_skeleton(const std::filesystem::path& dir, int joints);

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kBackground{255, 255, 255};
inline constexpr Rgb kBoneColor{40, 40, 40};
inline constexpr Rgb kJointColor{220, 30, 30};
inline constexpr Rgb kSeparatorColor{160, 160, 160};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, Rgb fill = kBackground);
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
};

/// Canvas is (W*scale) x (H*scale); joint j is centred on
/// (round(x*scale), round(y*scale)).
Image render_pose(const Pose& pixel_pose, FrameSize frame, const Skeleton& skeleton, int scale);

/// Side by side with a one-scale-unit separator.
Image filmstrip(const std::vector<Image>& frames, int gap);

std::string encode_ppm(const Image& img);
Image decode_ppm(const std::string& bytes);

}  // namespace actvae::cli
