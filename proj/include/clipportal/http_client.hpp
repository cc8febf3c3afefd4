#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clipportal/cookie_jar.hpp"
#include "clipportal/url.hpp"

namespace clipportal::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Response {
  int status = 0;
  Headers headers;
  std::string body;
  Url url;                    // URL that produced this response, after redirects
  std::size_t redirects = 0;
  std::uint64_t bytes_in = 0;   // all hops
  std::uint64_t bytes_out = 0;

  std::optional<std::string> header(std::string_view name) const;
  std::vector<std::string> headers_named(std::string_view name) const;
};

struct Request {
  std::string method = "GET";
  Url url;
  Headers headers;
  std::string body;
  std::string content_type;
};

class FetchError : public std::runtime_error {
 public:
  explicit FetchError(const std::string& what) : std::runtime_error(what) {}
};

struct TrafficStats {
  std::uint64_t requests = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t bytes_in = 0;
};

struct ClientOptions {
  std::string ca_cert_pem;      // extra trust anchor for https (e.g. the portal's self-signed cert)
  bool verify_tls = true;
  int max_redirects = 5;
  int timeout_seconds = 10;
  std::string user_agent = "clipportal/1.0";
};

/// Synchronous HTTP/1.1 client with an optional cookie jar, manual redirect
/// handling (cookies absorbed at every hop) and per-origin traffic counters.
/// Safe to use from several threads.
class Client {
 public:
  explicit Client(ClientOptions options = {}, CookieJar* jar = nullptr);

  Response get(const Url& url, const Headers& extra = {});
  Response post_form(const Url& url, const std::vector<std::pair<std::string, std::string>>& fields,
                     const Headers& extra = {});
  Response post_json(const Url& url, const std::string& json, const Headers& extra = {});
  /// One request; redirects followed when `follow` is set.
  Response send(Request req, bool follow = true);

  std::map<std::string, TrafficStats> traffic() const;
  TrafficStats traffic_for(std::string_view origin) const;
  CookieJar* jar() const { return jar_; }

 private:
  Response send_once(const Request& req);

  ClientOptions options_;
  CookieJar* jar_;
  mutable std::mutex mutex_;
  std::map<std::string, TrafficStats, std::less<>> traffic_;
};

std::string form_urlencode(const std::vector<std::pair<std::string, std::string>>& fields);

}  // namespace clipportal::http
