#pragma once

#include <cstddef>
#include <string>

namespace tcs {

/// Frame, patch and building-block sizes shared by every stage.
///
/// Voxels are vectorized x-fastest, then y, then time: the voxel (x, y, k)
/// of a w x h x t block sits at index x + w * (y + h * k). Every flattened
/// patch, the columns of the patch matrix, model files and dataset payloads
/// follow this order.
struct Geometry {
  int frame_width = 0;
  int frame_height = 0;
  int temporal_len = 0;
  int patch_width = 0;
  int patch_height = 0;
  int block_width = 0;
  int block_height = 0;
  int stride_x = 0;
  int stride_y = 0;

  /// Patch of `patch_factor` building blocks per axis, stride equal to the
  /// block. patch_factor = 2 with a 4x4x16 block is the 8x8x16 configuration.
  static Geometry from_block(int frame_width, int frame_height, int block_width, int block_height,
                             int temporal_len, int patch_factor = 2);

  /// Throws GeometryError when any invariant is violated.
  void validate() const;
  /// Same checks restricted to patch/block sizes (frame size ignored).
  void validate_patch() const;

  std::size_t patch_pixels() const { return std::size_t(patch_width) * patch_height; }
  std::size_t patch_voxels() const { return patch_pixels() * temporal_len; }
  std::size_t frame_pixels() const { return std::size_t(frame_width) * frame_height; }
  std::size_t frame_voxels() const { return frame_pixels() * temporal_len; }

  int patches_x() const { return (frame_width - patch_width) / stride_x + 1; }
  int patches_y() const { return (frame_height - patch_height) / stride_y + 1; }
  std::size_t patch_count() const { return std::size_t(patches_x()) * patches_y(); }

  Geometry with_frame(int width, int height) const {
    Geometry g = *this;
    g.frame_width = width;
    g.frame_height = height;
    return g;
  }

  std::string describe() const;
};

bool operator==(const Geometry& a, const Geometry& b);

/// Parses "AxB" or "AxBxC" dimension strings used on the command line.
struct Dims3 {
  int x = 0;
  int y = 0;
  int z = 1;
};
Dims3 parse_dims(const std::string& text);

}  // namespace tcs
