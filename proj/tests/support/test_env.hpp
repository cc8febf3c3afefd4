#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace clipportal::oracle {

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

/// First IPv4 address of a non-loopback interface that is up.
std::optional<std::string> non_loopback_ipv4();

/// A TCP port on 127.0.0.1 with nothing listening on it.
int closed_port();

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& text);

}  // namespace clipportal::oracle
