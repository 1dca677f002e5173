#include "tcs/geometry.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "tcs/error.hpp"

namespace tcs {

Geometry Geometry::from_block(int frame_width, int frame_height, int block_width, int block_height,
                              int temporal_len, int patch_factor) {
  Geometry g;
  g.frame_width = frame_width;
  g.frame_height = frame_height;
  g.temporal_len = temporal_len;
  g.block_width = block_width;
  g.block_height = block_height;
  g.patch_width = block_width * patch_factor;
  g.patch_height = block_height * patch_factor;
  g.stride_x = block_width;
  g.stride_y = block_height;
  return g;
}

void Geometry::validate_patch() const {
  if (temporal_len < 1 || block_width < 1 || block_height < 1)
    throw GeometryError("building block sizes must be positive: " + describe());
  if (patch_width < 1 || patch_height < 1)
    throw GeometryError("patch sizes must be positive: " + describe());
  if (patch_width % block_width != 0 || patch_height % block_height != 0)
    throw GeometryError("patch size must be a multiple of the building block: " + describe());
  if (stride_x != block_width || stride_y != block_height)
    throw GeometryError("stride must equal the building block size: " + describe());
}

void Geometry::validate() const {
  validate_patch();
  if (frame_width < patch_width || frame_height < patch_height)
    throw GeometryError("frame smaller than one patch: " + describe());
  if (frame_width % block_width != 0 || frame_height % block_height != 0)
    throw GeometryError("frame size must be a multiple of the building block: " + describe());
}

std::string Geometry::describe() const {
  std::ostringstream out;
  out << "frame " << frame_width << "x" << frame_height << "x" << temporal_len << ", patch "
      << patch_width << "x" << patch_height << ", block " << block_width << "x" << block_height
      << ", stride " << stride_x << "x" << stride_y;
  return out.str();
}

bool operator==(const Geometry& a, const Geometry& b) {
  return a.frame_width == b.frame_width && a.frame_height == b.frame_height &&
         a.temporal_len == b.temporal_len && a.patch_width == b.patch_width &&
         a.patch_height == b.patch_height && a.block_width == b.block_width &&
         a.block_height == b.block_height && a.stride_x == b.stride_x && a.stride_y == b.stride_y;
}

Dims3 parse_dims(const std::string& text) {
  std::vector<int> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('x', start);
    if (end == std::string::npos) end = text.size();
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + end, value);
    if (ec != std::errc{} || ptr != text.data() + end || value <= 0)
      throw InvalidArgument("bad dimension string '" + text + "'");
    parts.push_back(value);
    start = end + 1;
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw InvalidArgument("expected AxB or AxBxC, got '" + text + "'");
  Dims3 d{parts[0], parts[1], parts.size() == 3 ? parts[2] : 1};
  return d;
}

}  // namespace tcs
