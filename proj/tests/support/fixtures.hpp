#pragma once

#include <filesystem>
#include <string>

namespace vdcal::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& file);

/// True when both directory trees hold the same relative files with equal bytes.
bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace vdcal::testing
