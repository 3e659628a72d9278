#ifndef LOGITDYN_TESTS_TEST_UTIL_H_
#define LOGITDYN_TESTS_TEST_UTIL_H_

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "logitdyn/dataset.h"

namespace logitdyn::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("logitdyn_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Logits drawn from a tiny integer alphabet when `ties` is set, so argmax
// and top-K tie-breaking get exercised.
inline std::vector<float> RandomLogits(std::mt19937_64& rng, std::size_t n,
                                       bool ties) {
  std::vector<float> out(n);
  std::normal_distribution<float> normal(0.0f, 2.0f);
  std::uniform_int_distribution<int> small(0, 3);
  for (auto& v : out) v = ties ? static_cast<float>(small(rng)) : normal(rng);
  return out;
}

inline TrajectoryDataset RandomDataset(std::mt19937_64& rng, std::size_t n,
                                       std::size_t classes, std::size_t depth,
                                       bool ties = false) {
  std::vector<float> logits = RandomLogits(rng, n * classes * depth, ties);
  std::vector<std::uint32_t> labels(n);
  std::uniform_int_distribution<std::uint32_t> cls(
      0, static_cast<std::uint32_t>(classes - 1));
  for (auto& y : labels) y = cls(rng);
  return TrajectoryDataset::FromLogits(classes, depth, std::move(logits),
                                       std::move(labels), "random");
}

}  // namespace logitdyn::testing

#endif  // LOGITDYN_TESTS_TEST_UTIL_H_
