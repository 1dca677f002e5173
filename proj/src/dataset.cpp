#include "tcs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "tcs/binary.hpp"
#include "tcs/error.hpp"
#include "tcs/linear.hpp"
#include "tcs/rng.hpp"

namespace tcs {

namespace {

constexpr std::string_view kDatasetMagic = "SCSD";
constexpr std::uint16_t kDatasetVersion = 1;

/// `count` distinct values from [0, range) by Floyd's algorithm, in a
/// deterministic order.
std::vector<std::uint64_t> sample_distinct(std::uint64_t range, std::uint64_t count, Rng& rng) {
  std::vector<std::uint64_t> picked;
  picked.reserve(count);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  for (std::uint64_t j = range - count; j < range; ++j) {
    const std::uint64_t r = rng.below(j + 1);
    const std::uint64_t value = seen.contains(r) ? j : r;
    seen.insert(value);
    picked.push_back(value);
  }
  return picked;
}

std::uint8_t to_level(double v) {
  return std::uint8_t(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

Eigen::MatrixXf measure_blocks(const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& pixels,
                               const PatchMatrix& phi) {
  if (std::size_t(pixels.rows()) != phi.cols()) throw GeometryError("block length does not match Phi_p");
  const auto m = Eigen::Index(phi.rows());
  Eigen::MatrixXf out(m, pixels.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < pixels.cols(); ++c) {
    const Eigen::VectorXd x = pixels.col(c).cast<double>() / 255.0;
    const Eigen::VectorXd y = phi.apply(x);
    out.col(c) = y.cast<float>();
  }
  return out;
}

std::vector<std::uint64_t> proportional_quotas(std::span<const std::uint64_t> durations,
                                               std::uint64_t count) {
  const std::uint64_t total = std::accumulate(durations.begin(), durations.end(), std::uint64_t{0});
  if (durations.empty() || total == 0) throw InvalidArgument("no video frames to sample from");
  std::vector<std::uint64_t> quotas(durations.size());
  std::vector<std::pair<std::uint64_t, std::size_t>> remainders;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const unsigned __int128 scaled = (unsigned __int128)count * durations[i];
    quotas[i] = std::uint64_t(scaled / total);
    remainders.emplace_back(std::uint64_t(scaled % total), i);
    assigned += quotas[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++quotas[remainders[i].second];
  return quotas;
}

TrainingSet build_training_set(std::span<const VideoSource> videos, const MeasurementMask& mask,
                               const Geometry& patch_geometry, std::uint64_t count,
                               std::uint64_t seed, const NoiseSpec& noise) {
  noise.validate();
  if (count == 0) throw InvalidArgument("requested an empty training set");
  const PatchMatrix phi = patch_matrix(mask, patch_geometry);
  const Geometry& g = patch_geometry;
  const int t = g.temporal_len;

  std::vector<std::uint64_t> durations;
  for (const auto& v : videos) {
    if (v.frames.frames() < t || v.frames.width() < g.patch_width || v.frames.height() < g.patch_height)
      throw GeometryError("video '" + v.id + "' is smaller than one training block");
    durations.push_back(std::uint64_t(v.frames.frames()));
  }
  const auto quotas = proportional_quotas(durations, count);
  std::vector<std::uint64_t> first(videos.size() + 1, 0);
  for (std::size_t i = 0; i < videos.size(); ++i) first[i + 1] = first[i] + quotas[i];

  TrainingSet set;
  set.patch_width = g.patch_width;
  set.patch_height = g.patch_height;
  set.temporal_len = t;
  set.mask_hash = mask.hash();
  set.noise = noise;
  set.pixels.resize(Eigen::Index(g.patch_voxels()), Eigen::Index(count));
  set.measurements.resize(Eigen::Index(g.patch_pixels()), Eigen::Index(count));
  set.manifest.resize(videos.size());

  const auto n_videos = std::ptrdiff_t(videos.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t vi = 0; vi < n_videos; ++vi) {
    const auto& video = videos[std::size_t(vi)];
    const VideoVolume& vol = video.frames;
    const std::uint64_t nx = std::uint64_t((vol.width() - g.patch_width) / g.block_width + 1);
    const std::uint64_t ny = std::uint64_t((vol.height() - g.patch_height) / g.block_height + 1);
    const std::uint64_t nt = std::uint64_t(vol.frames() - t + 1);
    const std::uint64_t available = nx * ny * nt;
    const std::uint64_t quota = quotas[std::size_t(vi)];

    Rng rng(derive_seed(seed, std::uint64_t(vi)));
    std::vector<std::uint64_t> positions;
    const bool replacement = quota > available;
    if (replacement) {
      positions.resize(quota);
      for (auto& p : positions) p = rng.below(available);
    } else {
      positions = sample_distinct(available, quota, rng);
    }

    Rng noise_rng(derive_seed(noise.seed, std::uint64_t(vi)));
    Eigen::VectorXd x(Eigen::Index(g.patch_voxels()));
    for (std::uint64_t s = 0; s < quota; ++s) {
      const std::uint64_t pos = positions[s];
      const int px = int(pos % nx) * g.block_width;
      const int py = int((pos / nx) % ny) * g.block_height;
      const int pt = int(pos / (nx * ny));
      const auto col = Eigen::Index(first[std::size_t(vi)] + s);
      Eigen::Index i = 0;
      for (int k = 0; k < t; ++k)
        for (int y = 0; y < g.patch_height; ++y)
          for (int xx = 0; xx < g.patch_width; ++xx, ++i)
            set.pixels(i, col) = to_level(vol.at(px + xx, py + y, pt + k));
      x = set.pixels.col(col).cast<double>() / 255.0;
      Eigen::VectorXd y = phi.apply(x);
      if (noise.enabled())
        y = add_noise(std::span<const double>(y.data(), std::size_t(y.size())), noise, noise_rng).values;
      set.measurements.col(col) = y.cast<float>();
    }
    set.manifest[std::size_t(vi)] = {video.id, std::uint64_t(vol.frames()), quota, replacement};
  }
  return set;
}

LinearModel train_linear(const TrainingSet& data, const SolveOptions& options) {
  constexpr std::ptrdiff_t shards = 16;
  constexpr Eigen::Index chunk = 2048;
  const auto n = Eigen::Index(data.size());
  std::vector<MomentAccumulator> parts(shards);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t s = 0; s < shards; ++s) {
    MomentAccumulator acc(data.block_size(), data.measurement_size());
    const Eigen::Index begin = n * s / shards;
    const Eigen::Index end = n * (s + 1) / shards;
    for (Eigen::Index c = begin; c < end; c += chunk) {
      const Eigen::Index w = std::min(chunk, end - c);
      const Eigen::MatrixXd x = data.pixels.middleCols(c, w).cast<double>() / 255.0;
      const Eigen::MatrixXd y = data.measurements.middleCols(c, w).cast<double>();
      acc.accumulate(x, y);
    }
    parts[std::size_t(s)] = std::move(acc);
  }
  MomentAccumulator total(data.block_size(), data.measurement_size());
  for (const auto& p : parts) total.merge(p);
  return solve(total, data.mask_hash, options);
}

void TrainingSet::save(std::ostream& out) const {
  BinaryWriter w(out);
  w.put_magic(kDatasetMagic);
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint32_t>(std::uint32_t(block_size()));
  w.put<std::uint32_t>(std::uint32_t(measurement_size()));
  w.put<std::uint64_t>(std::uint64_t(size()));
  w.put<std::uint64_t>(mask_hash);
  w.put<std::uint8_t>(std::uint8_t(noise.kind));
  w.put<double>(noise.snr_lo_db);
  w.put<double>(noise.snr_hi_db);
  w.put<std::uint64_t>(noise.seed);
  w.put<std::uint32_t>(std::uint32_t(patch_width));
  w.put<std::uint32_t>(std::uint32_t(patch_height));
  w.put<std::uint32_t>(std::uint32_t(temporal_len));
  w.put<std::uint32_t>(std::uint32_t(manifest.size()));
  for (const auto& e : manifest) {
    w.put_string(e.id);
    w.put<std::uint64_t>(e.frames);
    w.put<std::uint64_t>(e.samples);
    w.put<std::uint8_t>(e.with_replacement ? 1 : 0);
  }
  w.put_array<std::uint8_t>({pixels.data(), std::size_t(pixels.size())});
  if (noise.enabled()) w.put_array<float>({measurements.data(), std::size_t(measurements.size())});
  w.check();
}

void TrainingSet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  save(out);
}

TrainingSet TrainingSet::load(std::istream& in, const MeasurementMask& mask) {
  BinaryReader r(in);
  r.expect_magic(kDatasetMagic);
  if (r.get<std::uint16_t>() != kDatasetVersion) throw FormatError("unsupported dataset version");
  TrainingSet set;
  const auto n_p = r.get<std::uint32_t>();
  const auto m_p = r.get<std::uint32_t>();
  const auto n = r.get<std::uint64_t>();
  set.mask_hash = r.get<std::uint64_t>();
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw FormatError("unknown noise kind in dataset");
  set.noise.kind = NoiseKind(kind);
  set.noise.snr_lo_db = r.get<double>();
  set.noise.snr_hi_db = r.get<double>();
  set.noise.seed = r.get<std::uint64_t>();
  set.patch_width = int(r.get<std::uint32_t>());
  set.patch_height = int(r.get<std::uint32_t>());
  set.temporal_len = int(r.get<std::uint32_t>());
  if (set.mask_hash != mask.hash())
    throw HashMismatchError("dataset was built with mask " + hex64(set.mask_hash) + ", not " +
                            hex64(mask.hash()));
  if (std::uint64_t(set.patch_width) * set.patch_height != m_p ||
      std::uint64_t(m_p) * set.temporal_len != n_p || n == 0 || n > (1ull << 34))
    throw FormatError("inconsistent dataset header");
  const auto entries = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < entries; ++i) {
    SourceEntry e;
    e.id = r.get_string();
    e.frames = r.get<std::uint64_t>();
    e.samples = r.get<std::uint64_t>();
    e.with_replacement = r.get<std::uint8_t>() != 0;
    set.manifest.push_back(std::move(e));
  }
  set.pixels.resize(n_p, Eigen::Index(n));
  r.get_array<std::uint8_t>({set.pixels.data(), std::size_t(set.pixels.size())});
  if (set.noise.enabled()) {
    set.measurements.resize(m_p, Eigen::Index(n));
    r.get_array<float>({set.measurements.data(), std::size_t(set.measurements.size())});
  } else {
    const Geometry g = Geometry::from_block(0, 0, mask.block().width(), mask.block().height(),
                                            mask.temporal_len(),
                                            set.patch_width / mask.block().width());
    if (g.patch_height != set.patch_height || g.temporal_len != set.temporal_len)
      throw FormatError("dataset patch size does not match the mask building block");
    set.measurements = measure_blocks(set.pixels, patch_matrix(mask, g));
  }
  return set;
}

TrainingSet TrainingSet::load(const std::string& path, const MeasurementMask& mask) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load(in, mask);
}

}  // namespace tcs
