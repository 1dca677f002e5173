#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "tcs/volume.hpp"

namespace tcs {

/// 10 log10(peak^2 / MSE). Identical inputs give +infinity, which the
/// aggregations below skip.
double psnr(const Image& reference, const Image& test, double peak = 255.0);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Mean SSIM over the valid region of a Gaussian-weighted local window
/// (11x11, sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255 by default). Inputs are
/// on the 0..255 scale and at least one window large.
double ssim(const Image& reference, const Image& test, const SsimParams& params = {});

/// Rounds [0, 1] intensities to 8-bit levels (kept as doubles 0..255).
Image quantize_frame(const VideoVolume& video, int frame);

struct FrameMetrics {
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct SequenceMetrics {
  std::vector<FrameMetrics> frames;
  double mean_psnr = std::numeric_limits<double>::infinity();  // over finite frames
  double mean_ssim = 1.0;
  std::size_t infinite_psnr_frames = 0;
};

/// Per-frame PSNR/SSIM between two [0, 1] videos after 8-bit quantization.
SequenceMetrics evaluate_sequence(const VideoVolume& reference, const VideoVolume& test);

void write_metrics_csv(const SequenceMetrics& metrics, std::ostream& out);
void write_metrics_json(const SequenceMetrics& metrics, std::ostream& out);

}  // namespace tcs
