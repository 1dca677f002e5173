#include "tcs/encoder.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "tcs/error.hpp"

namespace tcs {

CodedFrame encode(const VideoVolume& volume, const MeasurementMask& mask) {
  const int t = mask.temporal_len();
  if (volume.frames() != t)
    throw GeometryError("volume has " + std::to_string(volume.frames()) +
                        " frames, mask expects " + std::to_string(t));
  const int width = volume.width();
  const int height = volume.height();
  CodedFrame coded{Image(width, height), t, mask.hash()};
  auto out = coded.measurements.values();

  // Mask rows tiled to the frame width, one per (y mod h_s, k), so the inner
  // loop is a branch-free multiply-add. Multiplying by 0 or 1 is exact, so
  // the sums are bit-identical to summing the open frames directly.
  const int hs = mask.block().height();
  std::vector<double> tiled(std::size_t(hs) * t * width);
  for (int yy = 0; yy < hs; ++yy)
    for (int k = 0; k < t; ++k)
      for (int x = 0; x < width; ++x)
        tiled[(std::size_t(yy) * t + k) * width + x] = mask.at(x, yy, k);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    double* row = out.data() + std::size_t(y) * width;
    for (int k = 0; k < t; ++k) {
      const double* src = volume.row(y, k);
      const double* m = tiled.data() + (std::size_t(y % hs) * t + k) * width;
      for (int x = 0; x < width; ++x) row[x] += m[x] * src[x];
    }
  }
  return coded;
}

Eigen::VectorXd encode_patch(const Patch& patch, const PatchMatrix& phi) {
  if (patch.width != phi.patch_width() || patch.height != phi.patch_height() ||
      patch.frames != phi.frames())
    throw GeometryError("patch dimensions do not match Phi_p");
  const Eigen::VectorXd x = flatten_patch(patch);
  return phi.apply(x);
}

Eigen::VectorXd window(const CodedFrame& coded, int x_offset, int y_offset, int width, int height) {
  const Image& m = coded.measurements;
  if (x_offset < 0 || y_offset < 0 || x_offset + width > m.width() || y_offset + height > m.height())
    throw GeometryError("window outside the coded frame");
  Eigen::VectorXd y(Eigen::Index(width) * height);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) y[Eigen::Index(j) * width + i] = m.at(x_offset + i, y_offset + j);
  return y;
}

Eigen::MatrixXd window_matrix(const CodedFrame& coded, const Geometry& geometry) {
  geometry.validate();
  if (coded.measurements.width() != geometry.frame_width ||
      coded.measurements.height() != geometry.frame_height)
    throw GeometryError("coded frame does not match geometry " + geometry.describe());
  const int nx = geometry.patches_x();
  const int ny = geometry.patches_y();
  const int pw = geometry.patch_width;
  const int ph = geometry.patch_height;
  const Image& m = coded.measurements;
  Eigen::MatrixXd windows(Eigen::Index(geometry.patch_pixels()), Eigen::Index(nx) * ny);

#pragma omp parallel for schedule(static)
  for (int py = 0; py < ny; ++py)
    for (int px = 0; px < nx; ++px) {
      auto col = windows.col(Eigen::Index(py) * nx + px);
      for (int j = 0; j < ph; ++j)
        for (int i = 0; i < pw; ++i)
          col[Eigen::Index(j) * pw + i] = m.at(px * geometry.stride_x + i, py * geometry.stride_y + j);
    }
  return windows;
}

void NoiseSpec::validate() const {
  if (kind == NoiseKind::None) return;
  if (!(std::isfinite(snr_lo_db) && std::isfinite(snr_hi_db)) || snr_lo_db > snr_hi_db)
    throw InvalidArgument("noise SNR range must satisfy lo <= hi");
}

double noise_variance(std::span<const double> clean, double snr_db) {
  double power = 0.0;
  for (double v : clean) power += v * v;
  if (clean.empty() || power <= 0.0)
    throw InvalidArgument("SNR is undefined for a zero-power measurement");
  return power / (double(clean.size()) * std::pow(10.0, snr_db / 10.0));
}

namespace {

template <typename Out>
void draw_noise(std::span<const double> clean, double snr_db, Rng& rng, Out out,
                double& empirical_snr_db) {
  const double sigma = std::sqrt(noise_variance(clean, snr_db));
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double n = sigma * rng.normal();
    out[i] = clean[i] + n;
    signal += clean[i] * clean[i];
    noise += n * n;
  }
  empirical_snr_db =
      noise > 0.0 ? 10.0 * std::log10(signal / noise) : std::numeric_limits<double>::infinity();
}

}  // namespace

NoisyMeasurement add_noise(std::span<const double> clean, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  NoisyMeasurement result;
  result.values = Eigen::Map<const Eigen::VectorXd>(clean.data(), Eigen::Index(clean.size()));
  if (!spec.enabled()) {
    result.target_snr_db = result.empirical_snr_db = std::numeric_limits<double>::infinity();
    return result;
  }
  result.target_snr_db = rng.uniform(spec.snr_lo_db, spec.snr_hi_db);
  draw_noise(clean, result.target_snr_db, rng, result.values.data(), result.empirical_snr_db);
  return result;
}

NoisyMeasurement add_noise(std::span<const double> clean, const NoiseSpec& spec) {
  Rng rng(spec.seed);
  return add_noise(clean, spec, rng);
}

NoisyFrame add_noise(const CodedFrame& coded, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  NoisyFrame result{coded, std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
  if (!spec.enabled()) return result;
  result.target_snr_db = rng.uniform(spec.snr_lo_db, spec.snr_hi_db);
  draw_noise(coded.measurements.values(), result.target_snr_db, rng,
             result.frame.measurements.values().data(), result.empirical_snr_db);
  return result;
}

}  // namespace tcs
