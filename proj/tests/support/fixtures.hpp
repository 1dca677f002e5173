#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tcs/binary.hpp"
#include "tcs/mask.hpp"
#include "tcs/rng.hpp"
#include "tcs/volume.hpp"

namespace tcs::fixtures {

inline VideoVolume random_volume(int w, int h, int t, std::uint64_t seed) {
  VideoVolume v(w, h, t);
  Rng rng(seed);
  for (double& x : v.values()) x = rng.uniform();
  return v;
}

/// Random volume on the 8-bit grid, like real footage after ingestion.
inline VideoVolume random_levels(int w, int h, int t, std::uint64_t seed) {
  VideoVolume v(w, h, t);
  Rng rng(seed);
  for (double& x : v.values()) x = double(rng.below(256)) / 255.0;
  return v;
}

inline MeasurementMask make_mask(int ws, int hs, int t, std::uint64_t seed,
                                 Density density = {1, 2}) {
  return MeasurementMask(generate_building_block(ws, hs, t, density, seed));
}

/// Fresh per-test scratch directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("tcs_test_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::vector<char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint64_t file_hash(const std::string& path) {
  const auto bytes = read_bytes(path);
  Fnv1a h;
  h.update(bytes.data(), bytes.size());
  return h.digest();
}

/// Hash of whatever `save(ostream&)` writes, without touching the disk.
template <typename T>
std::uint64_t stream_hash(const T& artifact) {
  HashingStreambuf buf;
  std::ostream out(&buf);
  artifact.save(out);
  return buf.digest();
}

}  // namespace tcs::fixtures
