#ifndef DIALOGGEN_TESTUTIL_HPP
#define DIALOGGEN_TESTUTIL_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dialoggen/clock.hpp"
#include "dialoggen/gateway.hpp"

namespace testutil {

// Deterministic clock: sleep_for advances simulated time instantly and logs
// the requested durations.
class FakeClock final : public dialoggen::Clock {
 public:
  time_point now() override {
    std::lock_guard<std::mutex> lock(mutex_);
    return now_;
  }
  void sleep_for(duration d) override {
    std::lock_guard<std::mutex> lock(mutex_);
    now_ += d;
    sleeps_.push_back(d);
  }
  std::vector<duration> sleeps() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return sleeps_;
  }

 private:
  mutable std::mutex mutex_;
  time_point now_ = time_point{} + std::chrono::hours(1);
  std::vector<duration> sleeps_;
};

class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "dialoggen_test") {
    auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    for (;;) {
      path_ = base / (prefix + "_" + std::to_string(rng()));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Minimal always-succeeding backend config for mock-driven tests.
inline dialoggen::BackendConfig test_backend(int max_retries = 3) {
  dialoggen::BackendConfig backend;
  backend.endpoint = "http://localhost:1";  // never contacted when mocks exist
  backend.max_retries = max_retries;
  backend.rate_limit = 10000;
  return backend;
}

// The prompt set shipped with the repository.
inline dialoggen::PromptLibrary repo_prompts() {
  return dialoggen::PromptLibrary::from_directory(
      std::filesystem::path(DIALOGGEN_SOURCE_DIR) / "prompts");
}

inline std::string fenced(const dialoggen::json& payload) {
  return "```json\n" + payload.dump() + "\n```";
}

}  // namespace testutil

#endif  // DIALOGGEN_TESTUTIL_HPP
