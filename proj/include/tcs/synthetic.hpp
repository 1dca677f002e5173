#pragma once

#include <cstdint>

#include "tcs/volume.hpp"

namespace tcs {

/// Procedural test footage: a textured background under a layered stack of
/// moving, occluding shapes (discs, ellipses, rotated rectangles) with
/// log-uniform sizes and an optional global pan. Frames are rendered with
/// 2x2 supersampling and quantized to 8-bit levels.
struct SyntheticVideoSpec {
  int width = 64;
  int height = 64;
  int frames = 64;
  int objects = 40;
  double min_radius = 2.0;
  double max_radius = 20.0;
  double max_speed = 1.0;  // pixels per frame
  double pan_speed = 0.5;  // pixels per frame
  double texture = 0.08;   // stripe amplitude on shapes
  std::uint64_t seed = 1;
};

VideoVolume synthesize_video(const SyntheticVideoSpec& spec);

}  // namespace tcs
