#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clipportal/url.hpp"

namespace clipportal {

struct Cookie {
  using Clock = std::chrono::system_clock;

  std::string name;
  std::string value;
  std::string domain;       // lowercase, no leading dot
  std::string path = "/";
  std::optional<Clock::time_point> expires;  // empty: session cookie
  bool secure = false;
  bool http_only = false;
  bool host_only = true;
  std::string origin;       // origin of the response that set it
  Clock::time_point created{};
};

/// RFC 6265 cookie store, bucketed by the origin that set each cookie.
///
/// A cookie is only ever attached to requests for the same origin that set
/// it, and then only if the RFC 6265 domain, path and secure rules also
/// match. All operations are internally synchronized.
class CookieJar {
 public:
  using Clock = Cookie::Clock;

  /// Parses one Set-Cookie header value received from `request_url`.
  /// Returns false when the cookie was rejected or deleted nothing.
  bool set_from_header(const Url& request_url, std::string_view header, Clock::time_point now = Clock::now());

  /// Stores a cookie directly. `origin` must be set.
  void add(Cookie c);

  /// Cookie header value for a request to `url`, or empty.
  std::string cookie_header_for(const Url& url, Clock::time_point now = Clock::now()) const;

  std::vector<Cookie> cookies() const;
  std::vector<Cookie> cookies_for_origin(std::string_view origin) const;
  std::optional<Cookie> find(std::string_view origin, std::string_view name) const;
  std::size_t size() const;
  void clear();
  void clear_origin(std::string_view origin);

 private:
  void store_locked(Cookie c);

  mutable std::mutex mutex_;
  std::map<std::string, std::vector<Cookie>, std::less<>> by_origin_;
};

bool domain_match(std::string_view host, std::string_view domain);
bool path_match(std::string_view request_path, std::string_view cookie_path);
/// Default-path of RFC 6265 section 5.1.4.
std::string default_cookie_path(std::string_view request_path);
/// Parses an HTTP date (RFC 1123, RFC 850 or asctime forms).
std::optional<Cookie::Clock::time_point> parse_http_date(std::string_view text);

}  // namespace clipportal
