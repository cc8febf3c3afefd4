#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace clipportal::testbed {

struct Options {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // news site; grades site on port + 1. 0 picks free ports
  bool cors = false;
  std::size_t page_bytes = 1024;  // approximate size of the news and grades pages
  std::string user = "student";
  std::string pass = "s3cret";
};

/// One request as seen by a testbed site.
struct Hit {
  std::string site;  // "news" or "grades"
  std::string method;
  std::string path;
  std::string cookie;  // Cookie header as received
  int status = 0;
};

/// Simulated legacy sites:
///  news   /news, /news/page2          public, headlines stamped with a revision
///  grades /login                      form login (u, p, csrf), sets SID, redirects
///         /grades, /applet            require SID
///         /applet/lab.bin             embedded object payload, requires SID
/// Control endpoints on both sites: POST /_testbed/mutate?site=news|grades,
/// POST /_testbed/size?bytes=N, POST /_testbed/down?on=0|1.
class Testbed {
 public:
  explicit Testbed(Options options = {});
  ~Testbed();
  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  void start();
  void stop();

  std::string news_origin() const;
  std::string grades_origin() const;
  std::uint16_t news_port() const { return news_port_; }
  std::uint16_t grades_port() const { return grades_port_; }

  void mutate(const std::string& site);
  void set_page_bytes(std::size_t bytes) { page_bytes_ = bytes; }
  /// While down, every non-control request answers 503.
  void set_down(const std::string& site, bool down);
  std::uint64_t revision(const std::string& site) const;
  /// Invalidates every issued SID, as a server-side session timeout would.
  void expire_sessions();

  std::vector<Hit> hits() const;
  void clear_hits();
  /// Every SID value issued so far.
  std::vector<std::string> issued_sids() const;

  struct Impl;

 private:
  Options options_;
  std::unique_ptr<Impl> impl_;
  std::uint16_t news_port_ = 0;
  std::uint16_t grades_port_ = 0;
  std::atomic<std::size_t> page_bytes_;
};

/// Descriptor text for the three-portlet portal (news, grades, applet) over
/// the given origins.
std::string portal_descriptor(const std::string& portal_id, const std::string& news_origin,
                              const std::string& grades_origin);

struct DemoFiles {
  std::filesystem::path server_toml;
  std::filesystem::path descriptor;
  std::filesystem::path vault;
  std::string vault_passphrase;
  std::string portal_user;
  std::string portal_pass;
  std::string admin_user;
  std::string admin_pass;
};

/// Writes server.toml, the portal descriptor and a vault holding the grades
/// login into `dir`. The server config uses port 0 and plaintext
/// insecure-loopback mode unless `tls` is set.
DemoFiles write_demo_config(const std::filesystem::path& dir, const std::string& portal_id,
                            const std::string& news_origin, const std::string& grades_origin,
                            const Options& site_options, bool tls = false);

}  // namespace clipportal::testbed
