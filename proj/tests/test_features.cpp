#include <algorithm>
#include <set>

#include "support.hpp"
#include "wbseg/features.hpp"

using namespace wbseg;

TEST_SUITE("features") {

TEST_CASE("min-max normalisation over the mask") {
  const MultiModalVolume vol({3, 1, 1}, {"a", "b"}, {10, 20, 30, 5, 5, 5});
  const auto norm = normalize_modalities(vol, compute_brain_mask(vol));
  CHECK(norm.channel(0)[0] == 0.0f);
  CHECK(norm.channel(0)[1] == 0.5f);
  CHECK(norm.channel(0)[2] == 1.0f);
  for (float v : norm.channel(1)) CHECK(v == 0.0f);
}

TEST_CASE("out-of-mask voxels do not set the range") {
  const MultiModalVolume vol({4, 1, 1}, {"a"}, {10, 20, 30, 1000});
  const BrainMask mask({4, 1, 1}, {1, 1, 1, 0});
  const auto norm = normalize_modalities(vol, mask);
  CHECK(norm.channel(0)[2] == 1.0f);
  CHECK(norm.channel(0)[3] == 0.0f);
  CHECK_ERROR_CODE(normalize_modalities(vol, BrainMask({4, 1, 1}, {0, 0, 0, 0})), ErrorCode::EmptyMask);
}

TEST_CASE("normalised values stay in [0,1]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto vol = testing::random_volume({6, 5, 4}, 3, seed);
    const auto norm = normalize_modalities(vol, compute_brain_mask(vol, 50.0));
    for (float v : norm.values) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("spatial endpoints and dimensionality") {
  const Dims dims{100, 100, 100};
  const MultiModalVolume vol(dims, {"a", "b", "c"}, std::vector<float>(3 * dims.voxels(), 1.0f));
  const BrainMask mask = BrainMask::full(dims);
  const auto vf = featurize(normalize_modalities(vol, mask), mask);
  CHECK(vf.features.dim() == 6);
  auto first = vf.features.row(0);
  CHECK(first[3] == 0.0f);
  CHECK(first[4] == 0.0f);
  CHECK(first[5] == 0.0f);
  auto last = vf.features.row(vf.features.rows() - 1);
  CHECK(last[3] == 1.0f);
  CHECK(last[4] == 1.0f);
  CHECK(last[5] == 1.0f);
  CHECK(featurize(normalize_modalities(vol, mask), mask, false).features.dim() == 3);
}

TEST_CASE("row and voxel maps are inverse and the store is in-mask x 6 x 4 bytes") {
  const auto vol = testing::random_volume({7, 6, 5}, 3, 11);
  const BrainMask mask = compute_brain_mask(vol, 40.0);
  const auto vf = featurize(normalize_modalities(vol, mask), mask);
  REQUIRE(vf.voxel_of_row.size() == mask.count());
  for (std::size_t r = 0; r < vf.voxel_of_row.size(); ++r) {
    CHECK(vf.row_of_voxel[vf.voxel_of_row[r]] == static_cast<std::int32_t>(r));
  }
  std::size_t outside = 0;
  for (std::size_t v = 0; v < vol.dims().voxels(); ++v) outside += vf.row_of_voxel[v] < 0;
  CHECK(outside == vol.dims().voxels() - mask.count());
  CHECK(vf.store_bytes() == mask.count() * 6 * 4);
}

TEST_CASE("training set from strokes") {
  const auto vol = testing::random_volume({4, 4, 4}, 3, 2);
  std::vector<std::uint8_t> inside(64, 1);
  inside[63] = 0;
  const BrainMask mask({4, 4, 4}, inside);
  const auto vf = featurize(normalize_modalities(vol, mask), mask);
  StrokeSet s;
  s.add({{0, 0, 0}, TissueClass::Healthy});
  s.add({{1, 2, 3}, TissueClass::Edema});
  s.add({{2, 2, 2}, TissueClass::Enhancing});
  s.add({{1, 2, 3}, TissueClass::Edema});
  const auto ts = build_training_set(vf, vol.dims(), s);
  REQUIRE(ts.size() == 3);
  CHECK(ts.labels[1] == TissueClass::Edema);
  const auto row = vf.row_of_voxel[vol.dims().linear({1, 2, 3})];
  CHECK(std::ranges::equal(ts.features.row(1), vf.features.row(static_cast<std::size_t>(row))));
  s.add({{3, 3, 3}, TissueClass::Healthy});
  CHECK_ERROR_CODE(build_training_set(vf, vol.dims(), s), ErrorCode::StrokeOutsideMask);
}

TEST_CASE("subsample identity below the target") {
  const auto ts = testing::random_training_set({500, 200, 100, 100}, 6, 1);
  const auto rows = subsample_rows(ts, 1000, 3);
  CHECK(rows.size() == 900);
  CHECK(std::is_sorted(rows.begin(), rows.end()));
  CHECK(subsample_balanced(ts, 1000, 3).features.values().size() == ts.features.values().size());
  CHECK_ERROR_CODE(subsample_rows(ts, 7, 0), ErrorCode::TargetTooSmall);
}

TEST_CASE("subsample keeps healthy / non-healthy proportions") {
  const auto ts = testing::random_training_set({600, 200, 100, 100}, 6, 1);
  const auto sub = subsample_balanced(ts, 500, 9);
  const auto counts = sub.class_counts();
  CHECK(counts[0] == 300);
  CHECK(counts[1] + counts[2] + counts[3] == 200);
  CHECK(counts == std::array<std::size_t, 4>{300, 100, 50, 50});
}

TEST_CASE("subsample is seeded and keeps rare classes") {
  const auto ts = testing::random_training_set({5000, 3000, 1, 40}, 6, 4);
  const auto a = subsample_rows(ts, 100, 42);
  CHECK(a == subsample_rows(ts, 100, 42));
  CHECK(a != subsample_rows(ts, 100, 43));
  CHECK(a.size() == 100);
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == a.size());
  const auto counts = ts.subset(a).class_counts();
  CHECK(counts[2] == 1);
  CHECK(counts[3] >= 2);
}

TEST_CASE("largest remainder") {
  const std::vector<std::size_t> w{1, 1, 1};
  CHECK(largest_remainder(w, 10) == std::vector<std::size_t>{4, 3, 3});
  const std::vector<std::size_t> w2{600, 400};
  CHECK(largest_remainder(w2, 500) == std::vector<std::size_t>{300, 200});
  const std::vector<std::size_t> zero{0, 0};
  CHECK(largest_remainder(zero, 5) == std::vector<std::size_t>{0, 0});
}

}
