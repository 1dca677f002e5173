#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "tcs/mask.hpp"
#include "tcs/rng.hpp"
#include "tcs/volume.hpp"

namespace tcs {

/// y(x, y) = sum_k mask(x, y, k) * v(x, y, k). Rows are encoded in parallel;
/// per pixel the frames are summed in ascending order.
CodedFrame encode(const VideoVolume& volume, const MeasurementMask& mask);

/// y_i = Phi_p * flatten(patch).
Eigen::VectorXd encode_patch(const Patch& patch, const PatchMatrix& phi);

/// Measurement vector of the w x h window at (x_offset, y_offset), in the
/// patch's spatial order.
Eigen::VectorXd window(const CodedFrame& coded, int x_offset, int y_offset, int width, int height);

/// All stride-aligned windows as columns of an M_p x patch_count matrix, in
/// the patch order of extract_patches.
Eigen::MatrixXd window_matrix(const CodedFrame& coded, const Geometry& geometry);

enum class NoiseKind : std::uint8_t { None = 0, GaussianSnr = 1 };

/// Additive Gaussian measurement noise at a target SNR drawn uniformly from
/// [snr_lo_db, snr_hi_db]. SNR is the power ratio 10 log10(P_signal /
/// P_noise) with power taken as the mean square of the clean vector.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double snr_lo_db = 0.0;
  double snr_hi_db = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double lo_db, double hi_db, std::uint64_t seed) {
    return {NoiseKind::GaussianSnr, lo_db, hi_db, seed};
  }
  bool enabled() const { return kind != NoiseKind::None; }
  void validate() const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct NoisyMeasurement {
  Eigen::VectorXd values;
  double target_snr_db = 0.0;
  double empirical_snr_db = 0.0;
};

/// Noise variance for a clean vector and a target SNR.
double noise_variance(std::span<const double> clean, double snr_db);

/// Draws the noise with `rng`. Throws InvalidArgument for a zero-power input
/// when noise is enabled.
NoisyMeasurement add_noise(std::span<const double> clean, const NoiseSpec& spec, Rng& rng);
/// Same, with the generator seeded from spec.seed.
NoisyMeasurement add_noise(std::span<const double> clean, const NoiseSpec& spec);

struct NoisyFrame {
  CodedFrame frame;
  double target_snr_db = 0.0;
  double empirical_snr_db = 0.0;
};

/// Noise on a full coded frame; the SNR refers to the whole frame.
NoisyFrame add_noise(const CodedFrame& coded, const NoiseSpec& spec, Rng& rng);

}  // namespace tcs
