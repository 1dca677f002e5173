#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tcs/encoder.hpp"
#include "tcs/geometry.hpp"
#include "tcs/mask.hpp"
#include "tcs/volume.hpp"

namespace tcs {

struct VideoSource {
  std::string id;
  VideoVolume frames;  // whole clip, 8-bit levels normalized to [0, 1]
};

struct SourceEntry {
  std::string id;
  std::uint64_t frames = 0;
  std::uint64_t samples = 0;
  bool with_replacement = false;  // quota exceeded the distinct blocks available
  friend bool operator==(const SourceEntry&, const SourceEntry&) = default;
};

/// Paired samples: column i of `pixels` is the flattened block x_i in 8-bit
/// levels, column i of `measurements` is y_i = Phi_p x_i (+ noise).
struct TrainingSet {
  int patch_width = 0;
  int patch_height = 0;
  int temporal_len = 0;
  std::uint64_t mask_hash = 0;
  NoiseSpec noise;
  std::vector<SourceEntry> manifest;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> pixels;
  Eigen::MatrixXf measurements;

  std::size_t size() const { return std::size_t(pixels.cols()); }
  std::size_t block_size() const { return std::size_t(pixels.rows()); }
  std::size_t measurement_size() const { return std::size_t(measurements.rows()); }

  /// Blocks of the given columns scaled to [0, 1].
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> blocks(
      std::span<const std::size_t> columns) const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(pixels.rows(), Eigen::Index(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
      out.col(Eigen::Index(j)) =
          pixels.col(Eigen::Index(columns[j])).template cast<Scalar>() / Scalar(255);
    return out;
  }

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> measurements_of(
      std::span<const std::size_t> columns) const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(measurements.rows(),
                                                                 Eigen::Index(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
      out.col(Eigen::Index(j)) = measurements.col(Eigen::Index(columns[j])).template cast<Scalar>();
    return out;
  }

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  /// The mask is needed to regenerate noise-free measurements, which are
  /// not stored.
  static TrainingSet load(std::istream& in, const MeasurementMask& mask);
  static TrainingSet load(const std::string& path, const MeasurementMask& mask);
};

/// Clean measurements of stored 8-bit blocks, exactly as the builder makes them.
Eigen::MatrixXf measure_blocks(const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& pixels,
                               const PatchMatrix& phi);

/// Per-video sample quotas proportional to duration, summing to `count`
/// (largest remainder rounding).
std::vector<std::uint64_t> proportional_quotas(std::span<const std::uint64_t> durations,
                                               std::uint64_t count);

/// Samples `count` blocks at block-aligned spatial offsets and arbitrary
/// temporal offsets. Videos are processed in parallel with per-video derived
/// seeds; the result depends only on the inputs and `seed`.
TrainingSet build_training_set(std::span<const VideoSource> videos, const MeasurementMask& mask,
                               const Geometry& patch_geometry, std::uint64_t count,
                               std::uint64_t seed, const NoiseSpec& noise = NoiseSpec::none());

/// Linear decoder fitted to a training set (moments accumulated in shards,
/// merged in a fixed order).
class LinearModel;
struct SolveOptions;
LinearModel train_linear(const TrainingSet& data, const SolveOptions& options);

}  // namespace tcs
