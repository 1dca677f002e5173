#include "tcs/volume.hpp"

#include <algorithm>

#include "tcs/error.hpp"

namespace tcs {

Image VideoVolume::frame_image(int k) const {
  Image image(width_, height_);
  auto src = frame(k);
  std::copy(src.begin(), src.end(), image.values().begin());
  return image;
}

VideoVolume VideoVolume::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > frames_)
    throw GeometryError("frame range out of bounds");
  VideoVolume out(width_, height_, count);
  std::copy_n(values_.begin() + std::ptrdiff_t(frame_size() * first), frame_size() * count,
              out.values_.begin());
  return out;
}

VideoVolume VideoVolume::crop(int width, int height) const {
  if (width > width_ || height > height_) throw GeometryError("crop larger than volume");
  VideoVolume out(width, height, frames_);
  for (int k = 0; k < frames_; ++k)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(x, y, k) = at(x, y, k);
  return out;
}

VideoVolume concatenate(std::span<const VideoVolume> parts) {
  if (parts.empty()) return {};
  int frames = 0;
  for (const auto& p : parts) {
    if (p.width() != parts[0].width() || p.height() != parts[0].height())
      throw GeometryError("cannot concatenate volumes of different frame size");
    frames += p.frames();
  }
  VideoVolume out(parts[0].width(), parts[0].height(), frames);
  auto dst = out.values().begin();
  for (const auto& p : parts) dst = std::copy(p.values().begin(), p.values().end(), dst);
  return out;
}

Eigen::VectorXd flatten_patch(const Patch& patch) {
  return Eigen::Map<const Eigen::VectorXd>(patch.voxels.data(), Eigen::Index(patch.voxels.size()));
}

Patch unflatten_patch(std::span<const double> flat, int width, int height, int frames,
                      int frame_offset, int x_offset, int y_offset) {
  if (flat.size() != std::size_t(width) * height * frames)
    throw GeometryError("flat patch length does not match patch dimensions");
  return Patch{width, height, frames, frame_offset, x_offset, y_offset,
               std::vector<double>(flat.begin(), flat.end())};
}

Patch patch_at(const VideoVolume& volume, int width, int height, int frames, int frame_offset,
               int x_offset, int y_offset) {
  if (x_offset < 0 || y_offset < 0 || frame_offset < 0 || x_offset + width > volume.width() ||
      y_offset + height > volume.height() || frame_offset + frames > volume.frames())
    throw GeometryError("patch window outside the volume");
  Patch p{width, height, frames, frame_offset, x_offset, y_offset, {}};
  p.voxels.resize(std::size_t(width) * height * frames);
  std::size_t i = 0;
  for (int k = 0; k < frames; ++k)
    for (int y = 0; y < height; ++y) {
      const double* row = volume.row(y_offset + y, frame_offset + k) + x_offset;
      for (int x = 0; x < width; ++x) p.voxels[i++] = row[x];
    }
  return p;
}

std::vector<Patch> extract_patches(const VideoVolume& volume, const Geometry& geometry) {
  geometry.validate();
  if (volume.width() != geometry.frame_width || volume.height() != geometry.frame_height ||
      volume.frames() != geometry.temporal_len)
    throw GeometryError("volume does not match geometry " + geometry.describe());
  std::vector<Patch> patches;
  patches.reserve(geometry.patch_count());
  for (int py = 0; py < geometry.patches_y(); ++py)
    for (int px = 0; px < geometry.patches_x(); ++px)
      patches.push_back(patch_at(volume, geometry.patch_width, geometry.patch_height,
                                 geometry.temporal_len, 0, px * geometry.stride_x,
                                 py * geometry.stride_y));
  return patches;
}

}  // namespace tcs
