#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "support/fixtures.hpp"
#include "tcs/encoder.hpp"
#include "tcs/error.hpp"
#include "tcs/geometry.hpp"
#include "tcs/mask.hpp"
#include "tcs/reference.hpp"

using namespace tcs;

TEST(Density, FromDoubleReduces) {
  EXPECT_EQ(Density::from_double(0.5), (Density{1, 2}));
  EXPECT_EQ(Density::from_double(0.25), (Density{1, 4}));
  EXPECT_EQ(Density::from_double(1.0), (Density{1, 1}));
  EXPECT_EQ(Density::from_double(0.1), (Density{1, 10}));
  EXPECT_THROW(Density::from_double(0.0), InvalidArgument);
  EXPECT_THROW(Density::from_double(1.5), InvalidArgument);
}

TEST(BuildingBlock, ExactCountHasRoundedOnes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(generate_building_block(4, 4, 16, {1, 2}, seed).nonzeros(), 128u);
    EXPECT_EQ(generate_building_block(4, 4, 16, {1, 10}, seed).nonzeros(), 26u);  // 25.6
    EXPECT_EQ(generate_building_block(3, 3, 3, {1, 2}, seed).nonzeros(), 14u);   // 13.5 rounds up
  }
}

TEST(BuildingBlock, SeedDeterminesBlock) {
  EXPECT_EQ(generate_building_block(4, 4, 16, {1, 2}, 7), generate_building_block(4, 4, 16, {1, 2}, 7));
  EXPECT_NE(generate_building_block(4, 4, 16, {1, 2}, 7).bits(),
            generate_building_block(4, 4, 16, {1, 2}, 8).bits());
}

TEST(BuildingBlock, BernoulliDensityIsApproximate) {
  std::size_t ones = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    ones += generate_building_block(4, 4, 16, {1, 4}, seed, DensityMode::Bernoulli).nonzeros();
  EXPECT_NEAR(double(ones) / (200.0 * 256.0), 0.25, 0.01);
}

TEST(BuildingBlock, RejectsEmptyAndBadEntries) {
  EXPECT_THROW(generate_building_block(2, 2, 2, {1, 100}, 1), InvalidArgument);
  EXPECT_THROW(generate_building_block(0, 4, 16, {1, 2}, 1), InvalidArgument);
  EXPECT_THROW(BuildingBlock(1, 1, 2, {1, 2}, 0, {1, 2}), InvalidArgument);
  EXPECT_THROW(BuildingBlock(1, 1, 2, {1, 2}, 0, {1}), InvalidArgument);
}

TEST(Solvability, ReportsEmptyPixels) {
  // Pixel (1, 0) is never open.
  std::vector<std::uint8_t> bits{1, 0, 1, 1,   // k = 0, rows y = 0, 1
                                 0, 0, 1, 0};  // k = 1
  const BuildingBlock b(2, 2, 2, {1, 2}, 0, bits);
  const auto r = solvability_report(b);
  EXPECT_FALSE(r.solvable());
  ASSERT_EQ(r.empty_pixels.size(), 1u);
  EXPECT_EQ(r.empty_pixels[0], std::make_pair(1, 0));
  EXPECT_EQ(r.count(0, 0), 1);
  EXPECT_EQ(r.count(0, 1), 2);
  EXPECT_EQ(r.count(1, 1), 1);
}

TEST(MeasurementMask, TilesBuildingBlock) {
  const auto mask = fixtures::make_mask(4, 4, 16, 7);
  for (int k = 0; k < 16; ++k)
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x) ASSERT_EQ(mask.at(x, y, k), mask.block().at(x % 4, y % 4, k));
  EXPECT_EQ(mask.open_count(5, 6), mask.open_count(1, 2));
}

TEST(MeasurementMask, HashIsFnvOfIndependentSerialization) {
  const auto mask = fixtures::make_mask(4, 4, 16, 7);
  // Hand-assembled file bytes: magic, u16 version, u32 w/h/t/num/den, u64 seed, bits.
  std::string bytes = "SCSM";
  auto append = [&](auto v) {
    char buf[sizeof v];
    std::memcpy(buf, &v, sizeof v);
    bytes.append(buf, sizeof v);
  };
  append(std::uint16_t(1));
  for (std::uint32_t v : {4u, 4u, 16u, 1u, 2u}) append(v);
  append(std::uint64_t(7));
  for (auto b : mask.block().bits()) bytes.push_back(char(b));
  Fnv1a h;
  h.update(bytes.data(), bytes.size());
  EXPECT_EQ(mask.hash(), h.digest());

  std::stringstream ss;
  mask.save(ss);
  EXPECT_EQ(ss.str(), bytes);
}

TEST(MeasurementMask, SaveLoadRoundTrip) {
  fixtures::TempDir dir("mask_rt");
  const auto mask = fixtures::make_mask(4, 4, 16, 3, {3, 10});
  mask.save(dir.file("m.scsm"));
  const auto back = MeasurementMask::load(dir.file("m.scsm"));
  EXPECT_EQ(back.block(), mask.block());
  EXPECT_EQ(back.hash(), mask.hash());
}

TEST(MeasurementMask, CorruptFilesRejected) {
  const auto mask = fixtures::make_mask(4, 4, 16, 3);
  std::stringstream ss;
  mask.save(ss);
  std::string bytes = ss.str();

  std::string truncated = bytes.substr(0, bytes.size() - 5);
  std::stringstream t(truncated);
  EXPECT_THROW(MeasurementMask::load(t), FormatError);

  std::string bad_bit = bytes;
  bad_bit.back() = 7;
  std::stringstream b(bad_bit);
  EXPECT_THROW(MeasurementMask::load(b), FormatError);

  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::stringstream v(bad_version);
  EXPECT_THROW(MeasurementMask::load(v), FormatError);

  EXPECT_THROW(MeasurementMask::load(std::string("/nonexistent/m.scsm")), IoError);
}

TEST(PatchMatrix, DiagonalStructure) {
  const auto mask = fixtures::make_mask(4, 4, 16, 7);
  const auto g = Geometry::from_block(32, 32, 4, 4, 16);
  const auto phi = patch_matrix(mask, g);
  EXPECT_EQ(phi.rows(), 64u);
  EXPECT_EQ(phi.cols(), 1024u);
  // Four copies of the building block: nnz = 4 * 128.
  EXPECT_EQ(phi.nonzeros(), 512u);
  const auto dense = phi.dense();
  for (Eigen::Index r = 0; r < dense.rows(); ++r)
    for (Eigen::Index c = 0; c < dense.cols(); ++c) {
      if (c % 64 != r) ASSERT_EQ(dense(r, c), 0.0);
      const int x = int(r % 8), y = int(r / 8), k = int(c / 64);
      if (c % 64 == r) ASSERT_EQ(dense(r, c), mask.at(x, y, k));
    }
}

TEST(PatchMatrix, SameForEveryAlignedOffset) {
  const auto mask = fixtures::make_mask(4, 4, 16, 7);
  const auto g = Geometry::from_block(32, 32, 4, 4, 16);
  const auto phi = patch_matrix(mask, g);
  for (int y = 0; y <= 24; y += 4)
    for (int x = 0; x <= 24; x += 4) EXPECT_EQ(patch_matrix(mask, g, x, y), phi);
  EXPECT_THROW(patch_matrix(mask, g, 2, 0), GeometryError);
}

TEST(PatchMatrix, ApplyMatchesDenseProduct) {
  const auto mask = fixtures::make_mask(4, 4, 16, 7);
  const auto phi = patch_matrix(mask, Geometry::from_block(32, 32, 4, 4, 16));
  Eigen::MatrixXd blocks = Eigen::MatrixXd::Random(1024, 5);
  const Eigen::MatrixXd expect = phi.dense() * blocks;
  EXPECT_LT((phi.apply_columns(blocks) - expect).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd col = blocks.col(2);
  EXPECT_LT((phi.apply(col) - expect.col(2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(phi.apply(Eigen::VectorXd::Zero(10)), GeometryError);
}

TEST(PatchMatrix, MismatchedGeometryRejected) {
  const auto mask = fixtures::make_mask(4, 4, 16, 7);
  EXPECT_THROW(patch_matrix(mask, Geometry::from_block(32, 32, 4, 4, 8)), GeometryError);
}

TEST(Encoder, MatchesSerialReference) {
  const auto mask = fixtures::make_mask(4, 4, 8, 1);
  const auto v = fixtures::random_volume(20, 12, 8, 2);
  const auto a = encode(v, mask);
  const auto b = reference::encode(v, mask);
  EXPECT_EQ(a.measurements, b.measurements);
  EXPECT_EQ(a.mask_hash, mask.hash());
  EXPECT_EQ(a.temporal_len, 8);
}

TEST(Encoder, HandComputedPixel) {
  // All-open block sums the frames; an all-closed frame contributes nothing.
  std::vector<std::uint8_t> bits(2 * 2 * 3, 1);
  for (int i = 0; i < 4; ++i) bits[std::size_t(4 + i)] = 0;  // frame 1 closed
  const MeasurementMask mask(BuildingBlock(2, 2, 3, {2, 3}, 0, bits));
  VideoVolume v(2, 2, 3);
  for (int k = 0; k < 3; ++k) v.at(1, 1, k) = 0.1 * (k + 1);
  const auto y = encode(v, mask);
  EXPECT_DOUBLE_EQ(y.measurements.at(1, 1), 0.1 + 0.3);
  EXPECT_EQ(y.measurements.at(0, 0), 0.0);
}

TEST(Encoder, WrongFrameCountRejected) {
  const auto mask = fixtures::make_mask(4, 4, 8, 1);
  EXPECT_THROW(encode(fixtures::random_volume(8, 8, 7, 1), mask), GeometryError);
}

TEST(Encoder, LinearInTheVideo) {
  const auto mask = fixtures::make_mask(4, 4, 8, 1);
  const auto a = fixtures::random_volume(16, 16, 8, 1);
  const auto b = fixtures::random_volume(16, 16, 8, 2);
  VideoVolume sum(16, 16, 8);
  for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] = 2.0 * a.values()[i] + b.values()[i];
  const auto ya = encode(a, mask), yb = encode(b, mask), ys = encode(sum, mask);
  for (std::size_t i = 0; i < ys.measurements.size(); ++i)
    EXPECT_NEAR(ys.measurements.values()[i],
                2.0 * ya.measurements.values()[i] + yb.measurements.values()[i], 1e-12);
}

TEST(Encoder, WindowMatrixColumnsArePatchWindows) {
  const auto mask = fixtures::make_mask(4, 4, 8, 1);
  const auto v = fixtures::random_volume(16, 12, 8, 4);
  const auto g = Geometry::from_block(16, 12, 4, 4, 8);
  const auto coded = encode(v, mask);
  const auto windows = window_matrix(coded, g);
  const auto patches = extract_patches(v, g);
  const auto phi = patch_matrix(mask, g);
  ASSERT_EQ(std::size_t(windows.cols()), patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto y = encode_patch(patches[i], phi);
    EXPECT_LT((y - windows.col(Eigen::Index(i))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(window(coded, patches[i].x_offset, patches[i].y_offset, 8, 8), windows.col(Eigen::Index(i)));
  }
  EXPECT_THROW(window(coded, 12, 0, 8, 8), GeometryError);
}

TEST(Noise, VarianceFormula) {
  const std::vector<double> y{1.0, 2.0, 2.0};  // power 9, mean square 3
  EXPECT_DOUBLE_EQ(noise_variance(y, 10.0), 0.3);
  EXPECT_DOUBLE_EQ(noise_variance(y, 0.0), 3.0);
  const std::vector<double> zero(5, 0.0);
  EXPECT_THROW(noise_variance(zero, 20.0), InvalidArgument);
}

TEST(Noise, EmpiricalSnrNearTarget) {
  Rng src(1);
  std::vector<double> y(200000);
  for (double& v : y) v = src.uniform(0.0, 8.0);
  for (double snr : {20.0, 30.0, 40.0}) {
    const auto out = add_noise(y, NoiseSpec::gaussian(snr, snr, 5));
    EXPECT_DOUBLE_EQ(out.target_snr_db, snr);
    EXPECT_NEAR(out.empirical_snr_db, snr, 0.05);
  }
}

TEST(Noise, TargetDrawnFromRange) {
  const std::vector<double> y(64, 1.0);
  Rng rng(3);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 2000; ++i) {
    const double s = add_noise(y, NoiseSpec::gaussian(20.0, 40.0, 0), rng).target_snr_db;
    ASSERT_GE(s, 20.0);
    ASSERT_LE(s, 40.0);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  EXPECT_LT(lo, 21.0);
  EXPECT_GT(hi, 39.0);
}

TEST(Noise, DisabledIsIdentityAndSeedDeterministic) {
  const std::vector<double> y{0.5, 1.5, 2.5};
  const auto none = add_noise(y, NoiseSpec::none());
  EXPECT_EQ(none.values, Eigen::Map<const Eigen::VectorXd>(y.data(), 3));
  EXPECT_TRUE(std::isinf(none.empirical_snr_db));
  const auto a = add_noise(y, NoiseSpec::gaussian(20, 30, 9));
  const auto b = add_noise(y, NoiseSpec::gaussian(20, 30, 9));
  EXPECT_EQ(a.values, b.values);
  EXPECT_THROW(add_noise(y, NoiseSpec::gaussian(30, 20, 9)), InvalidArgument);
}

TEST(Noise, ZeroPowerFrameRejected) {
  CodedFrame f{Image(4, 4, 0.0), 8, 0};
  Rng rng(1);
  EXPECT_THROW(add_noise(f, NoiseSpec::gaussian(20, 20, 1), rng), InvalidArgument);
  EXPECT_NO_THROW(add_noise(f, NoiseSpec::none(), rng));
}
