#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "clipportal/portal_model.hpp"

namespace clipportal::server {

enum class TrafficClass { auth, descriptor, credentials, assets, relay, admin };
inline constexpr std::size_t kTrafficClasses = 6;

std::string_view to_string(TrafficClass c);

struct TrafficCounter {
  std::uint64_t bytes_out = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t request_count = 0;
};

struct TrafficSnapshot {
  std::array<TrafficCounter, kTrafficClasses> classes{};

  const TrafficCounter& operator[](TrafficClass c) const { return classes[static_cast<std::size_t>(c)]; }
  TrafficCounter total() const;
  std::string to_json() const;
};

struct PortalUser {
  std::string name;
  std::string password;       // plain, for development configs
  std::string password_hash;  // "pbkdf2-sha256$<iterations>$<salt hex>$<hash hex>"
  bool admin = false;
};

struct ServerConfig {
  std::string listen_host = "127.0.0.1";
  std::uint16_t port = 8443;  // 0 picks a free port
  bool tls = true;
  /// Plaintext mode for tests; secrets are then only served to loopback peers.
  bool insecure_loopback = false;
  std::filesystem::path cert_path;  // generated (self-signed) when missing
  std::filesystem::path key_path;
  std::map<std::string, std::filesystem::path> portals;  // portal_id -> descriptor file
  std::filesystem::path vault_path;
  std::string vault_passphrase_env = "CLIPPORTAL_VAULT_KEY";
  std::optional<std::string> vault_passphrase;  // overrides the environment
  std::vector<PortalUser> users;
  bool relay_enabled = false;
  /// "portlet-origins" (origins named by any portal's portlets) or "none".
  std::string relay_allowlist = "portlet-origins";
  std::filesystem::path ui_dir;      // static assets for /ui/*; a stub page when empty
  std::filesystem::path request_log;  // JSON lines; in-memory only when empty
  std::chrono::seconds token_ttl{3600};
  int rate_limit_failures = 10;
  std::chrono::seconds rate_limit_window{60};
};

/// Reads a server.toml file. Relative paths resolve against the file's directory.
ServerConfig load_server_config(const std::filesystem::path& path);
std::string hash_password(std::string_view password, unsigned iterations = 100000);
bool verify_password(const PortalUser& user, std::string_view password);

struct LogEntry {
  std::string time;
  std::string remote_addr;
  std::string method;
  std::string target;
  int status = 0;
  TrafficClass traffic_class = TrafficClass::assets;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::vector<std::pair<std::string, std::string>> request_headers;
  std::string request_body;   // redacted for credential-bearing classes
  std::string response_body;  // redacted for credential-bearing classes

  std::string to_json() const;
};

class PortalServer {
 public:
  explicit PortalServer(ServerConfig config);
  ~PortalServer();
  PortalServer(const PortalServer&) = delete;
  PortalServer& operator=(const PortalServer&) = delete;

  /// Binds and starts serving on a background thread. Returns the bound port.
  std::uint16_t start();
  void stop();

  std::uint16_t port() const { return port_; }
  /// Base URL clients use, e.g. https://127.0.0.1:8443
  std::string url() const;
  std::string certificate_pem() const { return cert_pem_; }
  std::string certificate_fingerprint() const { return fingerprint_; }

  TrafficSnapshot stats() const;
  std::vector<LogEntry> request_log() const;
  std::shared_ptr<const model::PortalDescriptor> descriptor(const std::string& portal_id) const;
  std::vector<std::string> relay_allowlist() const;

  struct Impl;

 private:
  ServerConfig config_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  std::uint16_t port_ = 0;
  std::string cert_pem_;
  std::string fingerprint_;
};

}  // namespace clipportal::server
