#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tcs/geometry.hpp"

namespace tcs {

/// Single grayscale frame, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height), values_(std::size_t(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  double& at(int x, int y) { return values_[std::size_t(y) * width_ + x]; }
  double at(int x, int y) const { return values_[std::size_t(y) * width_ + x]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Stack of grayscale frames with intensities normalized to [0, 1].
/// Layout follows the voxel order of Geometry: x fastest, then y, then frame.
class VideoVolume {
 public:
  VideoVolume() = default;
  VideoVolume(int width, int height, int frames, double fill = 0.0)
      : width_(width), height_(height), frames_(frames),
        values_(std::size_t(width) * height * frames, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int frames() const { return frames_; }
  std::size_t frame_size() const { return std::size_t(width_) * height_; }
  std::size_t size() const { return values_.size(); }

  double& at(int x, int y, int k) { return values_[index(x, y, k)]; }
  double at(int x, int y, int k) const { return values_[index(x, y, k)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double* row(int y, int k) { return values_.data() + index(0, y, k); }
  const double* row(int y, int k) const { return values_.data() + index(0, y, k); }

  std::span<const double> frame(int k) const {
    return {values_.data() + frame_size() * k, frame_size()};
  }
  Image frame_image(int k) const;

  /// Copy of frames [first, first + count).
  VideoVolume slice(int first, int count) const;
  /// Copy of the top-left width x height region of every frame.
  VideoVolume crop(int width, int height) const;

  friend bool operator==(const VideoVolume&, const VideoVolume&) = default;

 private:
  std::size_t index(int x, int y, int k) const {
    return (std::size_t(k) * height_ + y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  int frames_ = 0;
  std::vector<double> values_;
};

VideoVolume concatenate(std::span<const VideoVolume> parts);

/// A w_p x h_p x t block cut out of a volume. Voxels are stored already
/// flattened (x fastest, then y, then time).
struct Patch {
  int width = 0;
  int height = 0;
  int frames = 0;
  int frame_offset = 0;
  int x_offset = 0;
  int y_offset = 0;
  std::vector<double> voxels;

  double at(int x, int y, int k) const {
    return voxels[(std::size_t(k) * height + y) * width + x];
  }
  friend bool operator==(const Patch&, const Patch&) = default;
};

Eigen::VectorXd flatten_patch(const Patch& patch);
Patch unflatten_patch(std::span<const double> flat, int width, int height, int frames,
                      int frame_offset = 0, int x_offset = 0, int y_offset = 0);

/// Copies the patch at a given offset. No stride restriction.
Patch patch_at(const VideoVolume& volume, int width, int height, int frames, int frame_offset,
               int x_offset, int y_offset);

/// Every stride-aligned patch whose window fits inside the frame, in
/// row-major patch order (x offset fastest). The volume must hold exactly
/// geometry.temporal_len frames of geometry.frame_width x frame_height.
std::vector<Patch> extract_patches(const VideoVolume& volume, const Geometry& geometry);

/// One coded-exposure measurement, tagged with the hash of the mask that
/// produced it.
struct CodedFrame {
  Image measurements;
  int temporal_len = 0;
  std::uint64_t mask_hash = 0;
};

}  // namespace tcs
