#include "tcs/reference.hpp"

#include <algorithm>

#include "tcs/error.hpp"

namespace tcs::reference {

CodedFrame encode(const VideoVolume& volume, const MeasurementMask& mask) {
  const int t = mask.temporal_len();
  if (volume.frames() != t) throw GeometryError("volume/mask temporal length mismatch");
  CodedFrame coded{Image(volume.width(), volume.height()), t, mask.hash()};
  for (int y = 0; y < volume.height(); ++y)
    for (int x = 0; x < volume.width(); ++x) {
      double acc = 0.0;
      for (int k = 0; k < t; ++k) acc += double(mask.at(x, y, k)) * volume.at(x, y, k);
      coded.measurements.at(x, y) = acc;
    }
  return coded;
}

VideoVolume reconstruct(const CodedFrame& coded, const PatchDecoder& decoder, const Geometry& g) {
  g.validate();
  const int t = g.temporal_len;
  VideoVolume sum(g.frame_width, g.frame_height, t);
  Image count(g.frame_width, g.frame_height);
  Eigen::MatrixXd y(Eigen::Index(g.patch_pixels()), 1);
  for (int py = 0; py + g.patch_height <= g.frame_height; py += g.stride_y)
    for (int px = 0; px + g.patch_width <= g.frame_width; px += g.stride_x) {
      for (int j = 0; j < g.patch_height; ++j)
        for (int i = 0; i < g.patch_width; ++i)
          y(Eigen::Index(j) * g.patch_width + i, 0) = coded.measurements.at(px + i, py + j);
      const Eigen::MatrixXd block = decoder.decode_batch(y);
      for (int k = 0; k < t; ++k)
        for (int j = 0; j < g.patch_height; ++j)
          for (int i = 0; i < g.patch_width; ++i)
            sum.at(px + i, py + j, k) +=
                block((Eigen::Index(k) * g.patch_height + j) * g.patch_width + i, 0);
      for (int j = 0; j < g.patch_height; ++j)
        for (int i = 0; i < g.patch_width; ++i) count.at(px + i, py + j) += 1.0;
    }
  for (int k = 0; k < t; ++k)
    for (int y0 = 0; y0 < g.frame_height; ++y0)
      for (int x0 = 0; x0 < g.frame_width; ++x0)
        sum.at(x0, y0, k) = std::clamp(sum.at(x0, y0, k) / count.at(x0, y0), 0.0, 1.0);
  return sum;
}

std::vector<double> forward(const MlpParams<double>& params, const NormStats<double>& stats,
                            const std::vector<double>& measurement) {
  std::vector<double> h(measurement.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = (measurement[i] - stats.mean[Eigen::Index(i)]) / stats.stddev[Eigen::Index(i)];
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const bool hidden = l + 1 < params.layers.size();
    std::vector<double> next(std::size_t(layer.weights.rows()));
    for (std::size_t r = 0; r < next.size(); ++r) {
      double acc = layer.bias[Eigen::Index(r)];
      for (std::size_t c = 0; c < h.size(); ++c) acc += layer.weights(Eigen::Index(r), Eigen::Index(c)) * h[c];
      next[r] = hidden ? std::max(acc, 0.0) : acc;
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace tcs::reference
