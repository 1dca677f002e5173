#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "tcs/binary.hpp"
#include "tcs/error.hpp"
#include "tcs/geometry.hpp"
#include "tcs/rng.hpp"
#include "tcs/volume.hpp"

using namespace tcs;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(3);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Rng, BelowIsInRangeAndCoversIt) {
  Rng rng(5);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[rng.below(7)];
  for (int c : hist) EXPECT_NEAR(c, 10000, 500);
  EXPECT_EQ(rng.below(1), 0u);
  EXPECT_EQ(rng.below(0), 0u);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(9);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  rng.shuffle(v.begin(), v.end());
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 64; ++s) seen.insert(derive_seed(1, s));
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}

TEST(Fnv1a, KnownVectors) {
  // Published FNV-1a 64 test vectors.
  Fnv1a empty;
  EXPECT_EQ(empty.digest(), 0xcbf29ce484222325ULL);
  Fnv1a a;
  a.update("a", 1);
  EXPECT_EQ(a.digest(), 0xaf63dc4c8601ec8cULL);
  Fnv1a foobar;
  foobar.update("foobar", 6);
  EXPECT_EQ(foobar.digest(), 0x85944171f73967e8ULL);
}

TEST(Binary, HexRoundTrip) {
  EXPECT_EQ(hex64(0x00ab), "00000000000000ab");
  EXPECT_EQ(parse_hex64("3f82700d6043c2be"), 0x3f82700d6043c2beULL);
  EXPECT_THROW(parse_hex64("xyz"), FormatError);
}

TEST(Binary, HashingStreambufMatchesDirectHash) {
  HashingStreambuf buf;
  std::ostream out(&buf);
  out << "foo";
  out.put('b');
  out.write("ar", 2);
  Fnv1a direct;
  direct.update("foobar", 6);
  EXPECT_EQ(buf.digest(), direct.digest());
  EXPECT_EQ(buf.bytes(), 6u);
}

TEST(Binary, WriterReaderRoundTrip) {
  std::stringstream ss;
  BinaryWriter w(ss);
  w.put_magic("TEST");
  w.put<std::uint16_t>(7);
  w.put<double>(-1.5);
  w.put_string("hello");
  const std::vector<float> arr{1.f, 2.f, 3.f};
  w.put_array<float>(arr);
  BinaryReader r(ss);
  r.expect_magic("TEST");
  EXPECT_EQ(r.get<std::uint16_t>(), 7);
  EXPECT_EQ(r.get<double>(), -1.5);
  EXPECT_EQ(r.get_string(), "hello");
  std::vector<float> back(3);
  r.get_array<float>(back);
  EXPECT_EQ(back, arr);
  EXPECT_THROW(r.get<std::uint8_t>(), FormatError);
}

TEST(Binary, BadMagicRejected) {
  std::stringstream ss("NOPE");
  BinaryReader r(ss);
  EXPECT_THROW(r.expect_magic("SCSM"), FormatError);
}

TEST(Geometry, StandardConfiguration) {
  const auto g = Geometry::from_block(256, 256, 4, 4, 16);
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.patch_width, 8);
  EXPECT_EQ(g.patch_height, 8);
  EXPECT_EQ(g.patch_pixels(), 64u);
  EXPECT_EQ(g.patch_voxels(), 1024u);
  EXPECT_EQ(g.patches_x(), 63);
  EXPECT_EQ(g.patch_count(), 63u * 63u);
}

TEST(Geometry, RejectsBadConfigurations) {
  auto g = Geometry::from_block(30, 32, 4, 4, 16);
  EXPECT_THROW(g.validate(), GeometryError);  // width not a stride multiple
  g = Geometry::from_block(4, 4, 4, 4, 16);
  EXPECT_THROW(g.validate(), GeometryError);  // frame smaller than patch
  g = Geometry::from_block(32, 32, 4, 4, 16);
  g.patch_width = 6;
  EXPECT_THROW(g.validate(), GeometryError);  // patch not a block multiple
  g = Geometry::from_block(32, 32, 4, 4, 0);
  EXPECT_THROW(g.validate(), GeometryError);
}

TEST(Geometry, ParseDims) {
  const auto d = parse_dims("4x4x16");
  EXPECT_EQ(d.x, 4);
  EXPECT_EQ(d.y, 4);
  EXPECT_EQ(d.z, 16);
  const auto d2 = parse_dims("64x48");
  EXPECT_EQ(d2.x, 64);
  EXPECT_EQ(d2.y, 48);
  EXPECT_EQ(d2.z, 1);
  EXPECT_THROW(parse_dims("4x"), InvalidArgument);
  EXPECT_THROW(parse_dims("0x4"), InvalidArgument);
  EXPECT_THROW(parse_dims("abc"), InvalidArgument);
}

TEST(Volume, LayoutIsXFastestThenYThenFrame) {
  VideoVolume v(3, 2, 2);
  v.at(2, 1, 1) = 5.0;
  EXPECT_EQ(v.values()[2 + 3 * (1 + 2 * 1)], 5.0);
  EXPECT_EQ(v.row(1, 1)[2], 5.0);
}

TEST(Volume, FlattenOrderMatchesGeometryConvention) {
  const auto v = fixtures::random_volume(8, 8, 4, 1);
  const auto p = patch_at(v, 4, 4, 4, 0, 2, 3);
  const auto flat = flatten_patch(p);
  for (int k = 0; k < 4; ++k)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) EXPECT_EQ(flat[x + 4 * (y + 4 * k)], v.at(2 + x, 3 + y, k));
}

TEST(Volume, FlattenUnflattenRoundTrip) {
  const auto v = fixtures::random_volume(8, 8, 4, 2);
  const auto p = patch_at(v, 4, 4, 4, 0, 4, 0);
  const auto flat = flatten_patch(p);
  const auto back = unflatten_patch(std::span<const double>(flat.data(), std::size_t(flat.size())),
                                    4, 4, 4, 0, 4, 0);
  EXPECT_EQ(back, p);
}

TEST(Volume, ExtractPatchesOrderAndCount) {
  const auto v = fixtures::random_volume(16, 12, 4, 3);
  const auto g = Geometry::from_block(16, 12, 4, 4, 4);
  const auto patches = extract_patches(v, g);
  ASSERT_EQ(patches.size(), g.patch_count());
  EXPECT_EQ(patches[1].x_offset, 4);
  EXPECT_EQ(patches[1].y_offset, 0);
  EXPECT_EQ(patches[std::size_t(g.patches_x())].y_offset, 4);
  EXPECT_EQ(patches.back().x_offset, 8);
  EXPECT_EQ(patches.back().y_offset, 4);
}

TEST(Volume, ExtractPatchesRequiresMatchingFrames) {
  const auto v = fixtures::random_volume(16, 16, 5, 3);
  const auto g = Geometry::from_block(16, 16, 4, 4, 4);
  EXPECT_THROW(extract_patches(v, g), GeometryError);
}

TEST(Volume, SliceCropConcatenate) {
  const auto v = fixtures::random_volume(6, 5, 6, 4);
  const auto a = v.slice(0, 2), b = v.slice(2, 4);
  const std::vector<VideoVolume> parts{a, b};
  EXPECT_EQ(concatenate(parts), v);
  const auto c = v.crop(3, 2);
  EXPECT_EQ(c.width(), 3);
  EXPECT_EQ(c.at(2, 1, 5), v.at(2, 1, 5));
  EXPECT_THROW(v.slice(5, 2), GeometryError);
}
