#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tcs/geometry.hpp"

namespace tcs {

/// Nonzero fraction of a building block, kept as a reduced fraction so the
/// mask header round-trips exactly.
struct Density {
  std::uint32_t numerator = 1;
  std::uint32_t denominator = 2;

  double value() const { return double(numerator) / double(denominator); }
  /// Nearest fraction with denominator dividing 10^6.
  static Density from_double(double rho);
  friend bool operator==(const Density&, const Density&) = default;
};

enum class DensityMode {
  ExactCount,  // exactly round(rho * w * h * t) ones, placed by a seeded shuffle
  Bernoulli,   // each entry independently 1 with probability rho
};

/// Random binary w_s x h_s x t array tiled over the whole frame.
class BuildingBlock {
 public:
  BuildingBlock() = default;
  BuildingBlock(int width, int height, int frames, Density density, std::uint64_t seed,
                std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  int frames() const { return frames_; }
  Density density() const { return density_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::uint8_t at(int x, int y, int k) const {
    return bits_[(std::size_t(k) * height_ + y) * width_ + x];
  }
  std::size_t nonzeros() const;

  friend bool operator==(const BuildingBlock&, const BuildingBlock&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int frames_ = 0;
  Density density_;
  std::uint64_t seed_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Throws InvalidArgument when rho is outside (0, 1] or the exact count
/// rounds to zero ones.
BuildingBlock generate_building_block(int width, int height, int frames, Density density,
                                      std::uint64_t seed,
                                      DensityMode mode = DensityMode::ExactCount);

struct SolvabilityReport {
  int width = 0;
  int height = 0;
  std::vector<int> counts;  // ones across time, row-major over (x, y)
  std::vector<std::pair<int, int>> empty_pixels;
  bool solvable() const { return empty_pixels.empty(); }
  int count(int x, int y) const { return counts[std::size_t(y) * width + x]; }
};

SolvabilityReport solvability_report(const BuildingBlock& block);

/// The full measurement tensor, defined implicitly by tiling the building
/// block: value(x, y, k) = block(x mod w_s, y mod h_s, k).
class MeasurementMask {
 public:
  MeasurementMask() = default;
  explicit MeasurementMask(BuildingBlock block);

  const BuildingBlock& block() const { return block_; }
  int temporal_len() const { return block_.frames(); }

  std::uint8_t at(int x, int y, int k) const {
    return block_.at(x % block_.width(), y % block_.height(), k);
  }

  /// Number of open shutter slots at a pixel.
  int open_count(int x, int y) const;

  /// FNV-1a of the serialized mask file.
  std::uint64_t hash() const { return hash_; }

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static MeasurementMask load(std::istream& in);
  static MeasurementMask load(const std::string& path);

 private:
  BuildingBlock block_;
  std::uint64_t hash_ = 0;
};

/// Restriction of the mask to one w_p x h_p x t patch, as an M_p x N_p
/// binary matrix. Under the voxel order of Geometry it has the structure
/// [diag(phi_1), ..., diag(phi_t)]: row r touches only columns r + M_p * k.
class PatchMatrix {
 public:
  PatchMatrix() = default;
  PatchMatrix(int patch_width, int patch_height, int frames, std::vector<std::uint8_t> codes);

  int patch_width() const { return patch_width_; }
  int patch_height() const { return patch_height_; }
  int frames() const { return frames_; }
  std::size_t rows() const { return std::size_t(patch_width_) * patch_height_; }
  std::size_t cols() const { return rows() * frames_; }

  /// Shutter state of patch pixel r during frame k.
  std::uint8_t code(std::size_t row, int k) const { return codes_[std::size_t(k) * rows() + row]; }
  std::uint8_t coefficient(std::size_t row, std::size_t col) const;
  std::size_t nonzeros() const;

  Eigen::MatrixXd dense() const;

  /// y = Phi_p x for a flattened block, or column-wise for a block matrix.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& blocks) const;

  friend bool operator==(const PatchMatrix&, const PatchMatrix&) = default;

 private:
  int patch_width_ = 0;
  int patch_height_ = 0;
  int frames_ = 0;
  std::vector<std::uint8_t> codes_;
};

/// Patch matrix for the patch whose top-left corner is (x_offset, y_offset).
/// Offsets must be multiples of the building block; the result is then the
/// same for every offset.
PatchMatrix patch_matrix(const MeasurementMask& mask, const Geometry& geometry, int x_offset = 0,
                         int y_offset = 0);

}  // namespace tcs
