#pragma once

#include <filesystem>
#include <vector>

namespace dmd::cli {

// Remembers every output a command creates and deletes them again unless the
// command reaches Commit().
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard();

  /// Registers `path` before it is written and returns it.
  std::filesystem::path File(const std::filesystem::path& path);
  /// Creates `dir` (and parents); only directories created here are removed.
  void Directory(const std::filesystem::path& dir);
  void Commit() { committed_ = true; }

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<std::filesystem::path> dirs_;
  bool committed_ = false;
};

}  // namespace dmd::cli
