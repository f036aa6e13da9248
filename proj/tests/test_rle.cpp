#include <vcdet/error.hpp>
#include <vcdet/random.hpp>
#include <vcdet/rle.hpp>

#include <gtest/gtest.h>

using namespace vcdet;

namespace {

Bitmap random_bitmap(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const int w = 1 + static_cast<int>(rng.below(24));
  const int h = 1 + static_cast<int>(rng.below(24));
  Bitmap bm(w, h);
  // Blobby masks so runs vary in length, plus the all-off / all-on extremes.
  const double density = (seed % 7 == 0) ? 0.0 : (seed % 7 == 1) ? 1.0 : rng.uniform();
  bool on = rng.uniform() < density;
  for (int u = 0; u < w; ++u)
    for (int v = 0; v < h; ++v) {
      if (rng.uniform() < 0.2) on = rng.uniform() < density;
      bm.set(u, v, on);
    }
  return bm;
}

}  // namespace

TEST(Rle, RoundTripRandomMasks) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Bitmap bm = random_bitmap(seed);
    const RleMask rle = encode_rle(bm);
    ASSERT_EQ(decode_rle(rle), bm) << "seed " << seed;
    ASSERT_EQ(rle_area(rle), bm.count()) << "seed " << seed;
    ASSERT_EQ(canonicalize_rle(rle), rle) << "seed " << seed;
  }
}

TEST(Rle, ColumnMajorLayout) {
  // 2x3 (H=2, W=3): set (u=1,v=0) -> column-major index 2.
  Bitmap bm(3, 2);
  bm.set(1, 0);
  const RleMask rle = encode_rle(bm);
  EXPECT_EQ(rle.counts, (std::vector<std::uint32_t>{2, 1, 3}));
  EXPECT_EQ(rle.height, 2);
  EXPECT_EQ(rle.width, 3);
}

TEST(Rle, StartsWithZeroRun) {
  Bitmap bm(2, 2);
  bm.set(0, 0);
  EXPECT_EQ(encode_rle(bm).counts, (std::vector<std::uint32_t>{0, 1, 3}));
  EXPECT_EQ(encode_rle(Bitmap(2, 2)).counts, (std::vector<std::uint32_t>{4}));
}

TEST(Rle, CanonicalizeFoldsEmptyRuns) {
  const RleMask raw{2, 2, {1, 0, 1, 1, 1}};
  const RleMask canon = canonicalize_rle(raw);
  EXPECT_EQ(canon.counts, (std::vector<std::uint32_t>{2, 1, 1}));
  EXPECT_EQ(decode_rle(raw), decode_rle(canon));
}

TEST(Rle, RejectsBadRunSum) {
  EXPECT_THROW(decode_rle(RleMask{2, 2, {1, 2}}), InputError);
  EXPECT_THROW(canonicalize_rle(RleMask{2, 2, {5}}), InputError);
}
