#include "dmd/cli/output_guard.hpp"

namespace dmd::cli {

namespace fs = std::filesystem;

OutputGuard::~OutputGuard() {
  if (committed_) return;
  std::error_code ec;
  for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
  for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) {
    if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
  }
}

fs::path OutputGuard::File(const fs::path& path) {
  files_.push_back(path);
  return path;
}

void OutputGuard::Directory(const fs::path& dir) {
  std::vector<fs::path> missing;
  for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) {
    missing.push_back(p);
    if (p == p.parent_path()) break;
  }
  fs::create_directories(dir);
  for (auto it = missing.rbegin(); it != missing.rend(); ++it) dirs_.push_back(*it);
}

}  // namespace dmd::cli
