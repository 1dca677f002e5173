#include "tcs/pipeline.hpp"

#include <algorithm>

#include "tcs/binary.hpp"
#include "tcs/error.hpp"

namespace tcs {

Image overlap_weights(const Geometry& geometry) {
  geometry.validate();
  Image weights(geometry.frame_width, geometry.frame_height);
  for (int py = 0; py < geometry.patches_y(); ++py)
    for (int px = 0; px < geometry.patches_x(); ++px)
      for (int j = 0; j < geometry.patch_height; ++j)
        for (int i = 0; i < geometry.patch_width; ++i)
          weights.at(px * geometry.stride_x + i, py * geometry.stride_y + j) += 1.0;
  return weights;
}

namespace {

// Adds one row of decoded patches (N_p x patches_x) into `sum`.
void scatter_patch_row(VideoVolume& sum, const Eigen::Ref<const Eigen::MatrixXd>& row_blocks, int py,
                       const Geometry& g) {
  const int y0 = py * g.stride_y;
  for (int px = 0; px < g.patches_x(); ++px) {
    auto col = row_blocks.col(px);
    const int x0 = px * g.stride_x;
    Eigen::Index i = 0;
    for (int k = 0; k < g.temporal_len; ++k)
      for (int j = 0; j < g.patch_height; ++j) {
        double* row = sum.row(y0 + j, k) + x0;
        for (int x = 0; x < g.patch_width; ++x) row[x] += col[i++];
      }
  }
}

// Runs `row_task(py)` for every patch row. Rows r and r + passes never
// overlap vertically, so rows within a pass can run concurrently without
// two threads touching the same pixel, and every voxel receives its
// contributions in the same order regardless of thread count.
template <typename RowTask>
void for_each_patch_row(const Geometry& g, RowTask&& row_task) {
  const int passes = g.patch_height / g.stride_y;
  const int ny = g.patches_y();
  for (int pass = 0; pass < passes; ++pass) {
#pragma omp parallel for schedule(static)
    for (int py = pass; py < ny; py += passes) row_task(py);
  }
}

void divide_and_clamp(VideoVolume& sum, const Geometry& g) {
  const Image weights = overlap_weights(g);
  const auto w = weights.values();
  auto values = sum.values();
  const std::size_t plane = sum.frame_size();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < g.temporal_len; ++k)
    for (std::size_t p = 0; p < plane; ++p) {
      double& v = values[std::size_t(k) * plane + p];
      v = std::clamp(v / w[p], 0.0, 1.0);
    }
}

}  // namespace

VideoVolume average_blocks(const Eigen::Ref<const Eigen::MatrixXd>& blocks, const Geometry& geometry) {
  geometry.validate();
  const int nx = geometry.patches_x();
  if (std::size_t(blocks.rows()) != geometry.patch_voxels() || std::size_t(blocks.cols()) != geometry.patch_count())
    throw GeometryError("decoded block matrix does not match geometry");
  VideoVolume sum(geometry.frame_width, geometry.frame_height, geometry.temporal_len);
  for_each_patch_row(geometry, [&](int py) {
    scatter_patch_row(sum, blocks.middleCols(Eigen::Index(py) * nx, nx), py, geometry);
  });
  divide_and_clamp(sum, geometry);
  return sum;
}

VideoVolume reconstruct(const CodedFrame& coded, const PatchDecoder& decoder, const Geometry& geometry) {
  geometry.validate();
  if (decoder.mask_hash() != coded.mask_hash)
    throw HashMismatchError("decoder was trained for mask " + hex64(decoder.mask_hash()) +
                            " but the coded frame was captured with mask " + hex64(coded.mask_hash));
  if (coded.temporal_len != geometry.temporal_len)
    throw GeometryError("coded frame temporal length does not match geometry");
  if (decoder.measurement_size() != geometry.patch_pixels() ||
      decoder.block_size() != geometry.patch_voxels())
    throw GeometryError("decoder dimensions do not match geometry " + geometry.describe());
  if (coded.measurements.width() != geometry.frame_width ||
      coded.measurements.height() != geometry.frame_height)
    throw GeometryError("coded frame does not match geometry " + geometry.describe());

  // Decoding one patch row at a time keeps the decoded blocks in cache
  // instead of materializing all N_p x patch_count of them.
  const Image& m = coded.measurements;
  const int nx = geometry.patches_x();
  const int pw = geometry.patch_width;
  const int ph = geometry.patch_height;
  VideoVolume sum(geometry.frame_width, geometry.frame_height, geometry.temporal_len);
  for_each_patch_row(geometry, [&](int py) {
    Eigen::MatrixXd windows(Eigen::Index(geometry.patch_pixels()), nx);
    for (int px = 0; px < nx; ++px)
      for (int j = 0; j < ph; ++j)
        for (int i = 0; i < pw; ++i)
          windows(Eigen::Index(j) * pw + i, px) =
              m.at(px * geometry.stride_x + i, py * geometry.stride_y + j);
    scatter_patch_row(sum, decoder.decode_batch(windows), py, geometry);
  });
  divide_and_clamp(sum, geometry);
  return sum;
}

VideoVolume temporal_mean_baseline(const CodedFrame& coded, const MeasurementMask& mask) {
  const int w = coded.measurements.width();
  const int h = coded.measurements.height();
  const int t = mask.temporal_len();
  VideoVolume out(w, h, t);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int open = mask.open_count(x, y);
      const double v = open > 0 ? std::clamp(coded.measurements.at(x, y) / open, 0.0, 1.0) : 0.0;
      for (int k = 0; k < t; ++k) out.at(x, y, k) = v;
    }
  return out;
}

SequenceResult reconstruct_sequence(const VideoVolume& video, const MeasurementMask& mask,
                                    const PatchDecoder& decoder, const Geometry& patch_geometry,
                                    const NoiseSpec& noise) {
  const int t = mask.temporal_len();
  if (video.frames() % t != 0)
    throw GeometryError("sequence length must be a multiple of " + std::to_string(t) + " frames");
  const Geometry g = patch_geometry.with_frame(video.width(), video.height());
  Rng noise_rng(noise.seed);
  SequenceResult result;
  std::vector<VideoVolume> parts;
  for (int first = 0; first < video.frames(); first += t) {
    CodedFrame coded = encode(video.slice(first, t), mask);
    if (noise.enabled()) {
      NoisyFrame noisy = add_noise(coded, noise, noise_rng);
      coded = std::move(noisy.frame);
      result.realized_snr_db.push_back(noisy.empirical_snr_db);
    }
    parts.push_back(reconstruct(coded, decoder, g));
    result.coded.push_back(std::move(coded));
  }
  result.video = concatenate(parts);
  return result;
}

VideoVolume baseline_sequence(const VideoVolume& video, const MeasurementMask& mask) {
  const int t = mask.temporal_len();
  if (video.frames() % t != 0)
    throw GeometryError("sequence length must be a multiple of " + std::to_string(t) + " frames");
  std::vector<VideoVolume> parts;
  for (int first = 0; first < video.frames(); first += t)
    parts.push_back(temporal_mean_baseline(encode(video.slice(first, t), mask), mask));
  return concatenate(parts);
}

}  // namespace tcs
