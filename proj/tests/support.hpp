#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "wbseg/error.hpp"
#include "wbseg/volume.hpp"

// Fails unless `expr` throws wbseg::Error carrying `code`.
#define CHECK_ERROR_CODE(expr, expected)                       \
  do {                                                         \
    bool thrown_ = false;                                      \
    try {                                                      \
      (void)(expr);                                            \
    } catch (const wbseg::Error& e_) {                         \
      thrown_ = true;                                          \
      CHECK_MESSAGE(e_.code() == (expected), e_.what());       \
    }                                                          \
    CHECK_MESSAGE(thrown_, "no wbseg::Error from " #expr);     \
  } while (0)

namespace testing {

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wbseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline wbseg::MultiModalVolume random_volume(wbseg::Dims dims, std::size_t modalities, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(1.0f, 100.0f);
  std::vector<float> data(dims.voxels() * modalities);
  for (float& v : data) v = u(rng);
  std::vector<std::string> names;
  for (std::size_t m = 0; m < modalities; ++m) names.push_back("m" + std::to_string(m));
  return wbseg::MultiModalVolume(dims, names, std::move(data));
}

}  // namespace testing

#include "wbseg/features.hpp"

namespace testing {

// Uniform random features in [0,1); labels cycle through `classes`
// according to `counts` (per class, in class order).
inline wbseg::TrainingSet random_training_set(std::array<std::size_t, wbseg::kNumClasses> counts,
                                              std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  wbseg::TrainingSet ts;
  ts.features = wbseg::FeatureMatrix(0, dim);
  std::vector<float> row(dim);
  std::size_t n = 0;
  for (std::size_t c = 0; c < wbseg::kNumClasses; ++c) {
    for (std::size_t r = 0; r < counts[c]; ++r, ++n) {
      for (float& x : row) x = u(rng);
      ts.features.append(row);
      ts.labels.push_back(static_cast<wbseg::TissueClass>(c));
      ts.sources.push_back({n % 64, (n / 64) % 64, n / 4096});
    }
  }
  return ts;
}

}  // namespace testing
