#include "tcs/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tcs/binary.hpp"
#include "tcs/error.hpp"
#include "tcs/rng.hpp"

namespace tcs {

namespace {

constexpr std::string_view kMaskMagic = "SCSM";
constexpr std::uint16_t kMaskVersion = 1;

void write_mask(const BuildingBlock& block, std::ostream& out) {
  BinaryWriter w(out);
  w.put_magic(kMaskMagic);
  w.put<std::uint16_t>(kMaskVersion);
  w.put<std::uint32_t>(std::uint32_t(block.width()));
  w.put<std::uint32_t>(std::uint32_t(block.height()));
  w.put<std::uint32_t>(std::uint32_t(block.frames()));
  w.put<std::uint32_t>(block.density().numerator);
  w.put<std::uint32_t>(block.density().denominator);
  w.put<std::uint64_t>(block.seed());
  w.put_array<std::uint8_t>(block.bits());
  w.check();
}

}  // namespace

Density Density::from_double(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("density must lie in (0, 1]");
  constexpr std::uint32_t scale = 1000000;
  auto num = std::uint32_t(std::llround(rho * scale));
  if (num == 0) num = 1;
  const std::uint32_t g = std::gcd(num, scale);
  return Density{num / g, scale / g};
}

BuildingBlock::BuildingBlock(int width, int height, int frames, Density density, std::uint64_t seed,
                             std::vector<std::uint8_t> bits)
    : width_(width), height_(height), frames_(frames), density_(density), seed_(seed),
      bits_(std::move(bits)) {
  if (width < 1 || height < 1 || frames < 1)
    throw InvalidArgument("building block dimensions must be positive");
  if (bits_.size() != std::size_t(width) * height * frames)
    throw InvalidArgument("building block bit count does not match dimensions");
  for (auto b : bits_)
    if (b > 1) throw InvalidArgument("building block entries must be 0 or 1");
}

std::size_t BuildingBlock::nonzeros() const {
  return std::size_t(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BuildingBlock generate_building_block(int width, int height, int frames, Density density,
                                      std::uint64_t seed, DensityMode mode) {
  if (width < 1 || height < 1 || frames < 1)
    throw InvalidArgument("building block dimensions must be positive");
  if (density.denominator == 0 || density.numerator == 0 || density.numerator > density.denominator)
    throw InvalidArgument("density must lie in (0, 1]");
  const std::size_t total = std::size_t(width) * height * frames;
  std::vector<std::uint8_t> bits(total, 0);
  Rng rng(seed);
  if (mode == DensityMode::ExactCount) {
    // round(rho * total) in integer arithmetic, halves rounded up
    const std::uint64_t ones =
        (2 * std::uint64_t(density.numerator) * total + density.denominator) /
        (2 * std::uint64_t(density.denominator));
    if (ones < 1) throw InvalidArgument("density too low: the building block would be empty");
    std::fill_n(bits.begin(), ones, std::uint8_t{1});
    rng.shuffle(bits.begin(), bits.end());
  } else {
    if (density.value() * double(total) < 1.0)
      throw InvalidArgument("density too low: the building block would be empty");
    const double rho = density.value();
    for (auto& b : bits) b = rng.uniform() < rho ? 1 : 0;
  }
  return BuildingBlock(width, height, frames, density, seed, std::move(bits));
}

SolvabilityReport solvability_report(const BuildingBlock& block) {
  SolvabilityReport report;
  report.width = block.width();
  report.height = block.height();
  report.counts.assign(std::size_t(block.width()) * block.height(), 0);
  for (int y = 0; y < block.height(); ++y)
    for (int x = 0; x < block.width(); ++x) {
      int c = 0;
      for (int k = 0; k < block.frames(); ++k) c += block.at(x, y, k);
      report.counts[std::size_t(y) * block.width() + x] = c;
      if (c == 0) report.empty_pixels.emplace_back(x, y);
    }
  return report;
}

MeasurementMask::MeasurementMask(BuildingBlock block) : block_(std::move(block)) {
  HashingStreambuf sink;
  std::ostream out(&sink);
  write_mask(block_, out);
  hash_ = sink.digest();
}

int MeasurementMask::open_count(int x, int y) const {
  int c = 0;
  for (int k = 0; k < block_.frames(); ++k) c += at(x, y, k);
  return c;
}

void MeasurementMask::save(std::ostream& out) const { write_mask(block_, out); }

void MeasurementMask::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  save(out);
}

MeasurementMask MeasurementMask::load(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(kMaskMagic);
  const auto version = r.get<std::uint16_t>();
  if (version != kMaskVersion) throw FormatError("unsupported mask version");
  const auto w = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  const auto t = r.get<std::uint32_t>();
  Density d{r.get<std::uint32_t>(), r.get<std::uint32_t>()};
  const auto seed = r.get<std::uint64_t>();
  if (w == 0 || h == 0 || t == 0 || std::uint64_t(w) * h * t > (1u << 24))
    throw FormatError("implausible building block size in mask file");
  std::vector<std::uint8_t> bits(std::size_t(w) * h * t);
  r.get_array<std::uint8_t>(bits);
  try {
    return MeasurementMask(BuildingBlock(int(w), int(h), int(t), d, seed, std::move(bits)));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("corrupt mask file: ") + e.what());
  }
}

MeasurementMask MeasurementMask::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load(in);
}

PatchMatrix::PatchMatrix(int patch_width, int patch_height, int frames,
                         std::vector<std::uint8_t> codes)
    : patch_width_(patch_width), patch_height_(patch_height), frames_(frames),
      codes_(std::move(codes)) {
  if (codes_.size() != rows() * std::size_t(frames))
    throw InvalidArgument("patch matrix code count does not match dimensions");
}

std::uint8_t PatchMatrix::coefficient(std::size_t row, std::size_t col) const {
  if (col % rows() != row) return 0;
  return code(row, int(col / rows()));
}

std::size_t PatchMatrix::nonzeros() const {
  return std::size_t(std::count(codes_.begin(), codes_.end(), std::uint8_t{1}));
}

Eigen::MatrixXd PatchMatrix::dense() const {
  const auto m = Eigen::Index(rows());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(m, Eigen::Index(cols()));
  for (int k = 0; k < frames_; ++k)
    for (Eigen::Index r = 0; r < m; ++r) phi(r, r + m * k) = code(std::size_t(r), k);
  return phi;
}

Eigen::VectorXd PatchMatrix::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (std::size_t(x.size()) != cols()) throw GeometryError("block length does not match Phi_p");
  const auto m = Eigen::Index(rows());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < frames_; ++k)
    for (Eigen::Index r = 0; r < m; ++r)
      if (code(std::size_t(r), k)) y[r] += x[r + m * k];
  return y;
}

Eigen::MatrixXd PatchMatrix::apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& blocks) const {
  if (std::size_t(blocks.rows()) != cols()) throw GeometryError("block length does not match Phi_p");
  const auto m = Eigen::Index(rows());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, blocks.cols());
  for (Eigen::Index c = 0; c < blocks.cols(); ++c)
    for (int k = 0; k < frames_; ++k)
      for (Eigen::Index r = 0; r < m; ++r)
        if (code(std::size_t(r), k)) y(r, c) += blocks(r + m * k, c);
  return y;
}

PatchMatrix patch_matrix(const MeasurementMask& mask, const Geometry& geometry, int x_offset,
                         int y_offset) {
  geometry.validate_patch();
  const auto& block = mask.block();
  if (geometry.block_width != block.width() || geometry.block_height != block.height() ||
      geometry.temporal_len != block.frames())
    throw GeometryError("geometry building block does not match the mask (" +
                        geometry.describe() + ")");
  if (x_offset < 0 || y_offset < 0 || x_offset % block.width() != 0 ||
      y_offset % block.height() != 0)
    throw GeometryError("patch offset must be a multiple of the building block");
  const std::size_t m = geometry.patch_pixels();
  std::vector<std::uint8_t> codes(m * std::size_t(geometry.temporal_len));
  for (int k = 0; k < geometry.temporal_len; ++k)
    for (int y = 0; y < geometry.patch_height; ++y)
      for (int x = 0; x < geometry.patch_width; ++x)
        codes[std::size_t(k) * m + std::size_t(y) * geometry.patch_width + x] =
            mask.at(x_offset + x, y_offset + y, k);
  return PatchMatrix(geometry.patch_width, geometry.patch_height, geometry.temporal_len,
                     std::move(codes));
}

}  // namespace tcs
