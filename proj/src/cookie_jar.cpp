#include "clipportal/cookie_jar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <ctime>

namespace clipportal {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_ip_literal(std::string_view host) {
  if (host.find(':') != std::string_view::npos) return true;
  return !host.empty() && std::all_of(host.begin(), host.end(), [](char c) {
    return c == '.' || std::isdigit(static_cast<unsigned char>(c));
  });
}

bool expired(const Cookie& c, Cookie::Clock::time_point now) { return c.expires && *c.expires <= now; }

bool same_slot(const Cookie& a, const Cookie& b) {
  return a.name == b.name && a.domain == b.domain && a.path == b.path;
}

}  // namespace

bool domain_match(std::string_view host, std::string_view domain) {
  if (host == domain) return true;
  if (is_ip_literal(host) || domain.empty()) return false;
  return host.size() > domain.size() && host.ends_with(domain) && host[host.size() - domain.size() - 1] == '.';
}

bool path_match(std::string_view request_path, std::string_view cookie_path) {
  if (request_path == cookie_path) return true;
  if (!request_path.starts_with(cookie_path)) return false;
  return cookie_path.ends_with('/') || request_path[cookie_path.size()] == '/';
}

std::string default_cookie_path(std::string_view request_path) {
  if (request_path.empty() || request_path.front() != '/') return "/";
  auto last = request_path.rfind('/');
  if (last == 0) return "/";
  return std::string(request_path.substr(0, last));
}

std::optional<Cookie::Clock::time_point> parse_http_date(std::string_view text) {
  // RFC 6265 section 5.1.1 date algorithm: scan tokens for time, day, month, year.
  static const char* months[] = {"jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  std::optional<int> hour, minute, second, day, month, year;
  std::size_t i = 0;
  auto is_delim = [](char c) {
    return c == '\t' || (c >= 0x20 && c <= 0x2f) || (c >= 0x3b && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
           (c >= 0x7b && c <= 0x7e);
  };
  while (i < text.size()) {
    while (i < text.size() && is_delim(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_delim(text[i])) ++i;
    std::string_view tok = text.substr(start, i - start);
    if (tok.empty()) continue;
    int h = 0, m = 0, s = 0;
    if (!hour && std::sscanf(std::string(tok).c_str(), "%2d:%2d:%2d", &h, &m, &s) == 3) {
      hour = h, minute = m, second = s;
      continue;
    }
    bool digits = std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (!day && digits && tok.size() <= 2) {
      day = std::stoi(std::string(tok));
      continue;
    }
    if (!month && tok.size() >= 3) {
      std::string mon = lower(tok.substr(0, 3));
      bool found = false;
      for (int k = 0; k < 12; ++k) {
        if (mon == months[k]) {
          month = k + 1;
          found = true;
        }
      }
      if (found) continue;
    }
    if (!year && digits && (tok.size() == 2 || tok.size() == 4)) {
      int y = std::stoi(std::string(tok));
      if (y >= 70 && y <= 99) y += 1900;
      if (y >= 0 && y <= 69) y += 2000;
      year = y;
    }
  }
  if (!hour || !day || !month || !year) return std::nullopt;
  if (*day < 1 || *day > 31 || *year < 1601 || *hour > 23 || *minute > 59 || *second > 59) return std::nullopt;
  std::tm tm{};
  tm.tm_year = *year - 1900;
  tm.tm_mon = *month - 1;
  tm.tm_mday = *day;
  tm.tm_hour = *hour;
  tm.tm_min = *minute;
  tm.tm_sec = *second;
  return Cookie::Clock::from_time_t(timegm(&tm));
}

bool CookieJar::set_from_header(const Url& request_url, std::string_view header, Clock::time_point now) {
  std::string_view rest = header;
  auto semi = rest.find(';');
  std::string_view pair = trim(rest.substr(0, semi));
  rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
  auto eq = pair.find('=');
  if (eq == std::string_view::npos) return false;
  Cookie c;
  c.name = std::string(trim(pair.substr(0, eq)));
  c.value = std::string(trim(pair.substr(eq + 1)));
  if (c.name.empty()) return false;
  c.origin = request_url.origin();
  c.created = now;
  c.domain = request_url.host;
  c.path = default_cookie_path(request_url.path);

  std::optional<Clock::time_point> max_age_expiry;
  std::optional<Clock::time_point> expires_attr;
  while (!rest.empty()) {
    semi = rest.find(';');
    std::string_view av = trim(rest.substr(0, semi));
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    auto aeq = av.find('=');
    std::string key = lower(trim(av.substr(0, aeq)));
    std::string_view value = aeq == std::string_view::npos ? std::string_view{} : trim(av.substr(aeq + 1));
    if (key == "expires") {
      if (auto t = parse_http_date(value)) expires_attr = *t;
    } else if (key == "max-age") {
      long long secs = 0;
      bool neg = value.starts_with('-');
      auto digits = neg ? value.substr(1) : value;
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
        continue;
      }
      std::from_chars(digits.data(), digits.data() + digits.size(), secs);
      max_age_expiry = neg || secs == 0 ? Clock::time_point::min() : now + std::chrono::seconds(secs);
    } else if (key == "domain") {
      std::string_view d = value;
      if (d.starts_with('.')) d.remove_prefix(1);
      if (d.empty()) continue;
      std::string dom = lower(d);
      if (!domain_match(request_url.host, dom)) return false;
      // Refuse domain cookies on bare TLDs.
      if (dom.find('.') == std::string::npos && dom != request_url.host) return false;
      c.domain = dom;
      c.host_only = dom == request_url.host;
    } else if (key == "path") {
      c.path = value.empty() || value.front() != '/' ? default_cookie_path(request_url.path) : std::string(value);
    } else if (key == "secure") {
      c.secure = true;
    } else if (key == "httponly") {
      c.http_only = true;
    }
  }
  if (max_age_expiry) {
    c.expires = *max_age_expiry;
  } else if (expires_attr) {
    c.expires = *expires_attr;
  }
  if (c.secure && !request_url.is_secure()) return false;

  std::lock_guard lock(mutex_);
  auto& bucket = by_origin_[c.origin];
  auto it = std::find_if(bucket.begin(), bucket.end(), [&](const Cookie& o) { return same_slot(o, c); });
  if (it != bucket.end()) {
    c.created = it->created;
    bucket.erase(it);
  }
  if (expired(c, now)) return false;
  bucket.push_back(std::move(c));
  return true;
}

void CookieJar::add(Cookie c) {
  std::lock_guard lock(mutex_);
  store_locked(std::move(c));
}

void CookieJar::store_locked(Cookie c) {
  auto& bucket = by_origin_[c.origin];
  std::erase_if(bucket, [&](const Cookie& o) { return same_slot(o, c); });
  bucket.push_back(std::move(c));
}

std::string CookieJar::cookie_header_for(const Url& url, Clock::time_point now) const {
  std::lock_guard lock(mutex_);
  auto it = by_origin_.find(url.origin());
  if (it == by_origin_.end()) return {};
  std::vector<const Cookie*> matches;
  for (const auto& c : it->second) {
    if (expired(c, now)) continue;
    bool host_ok = c.host_only ? url.host == c.domain : domain_match(url.host, c.domain);
    if (!host_ok || !path_match(url.path, c.path)) continue;
    if (c.secure && !url.is_secure()) continue;
    matches.push_back(&c);
  }
  // Longer paths first, then earlier creation.
  std::stable_sort(matches.begin(), matches.end(), [](const Cookie* a, const Cookie* b) {
    if (a->path.size() != b->path.size()) return a->path.size() > b->path.size();
    return a->created < b->created;
  });
  std::string out;
  for (const Cookie* c : matches) {
    if (!out.empty()) out += "; ";
    out += c->name;
    out += '=';
    out += c->value;
  }
  return out;
}

std::vector<Cookie> CookieJar::cookies() const {
  std::lock_guard lock(mutex_);
  std::vector<Cookie> out;
  for (const auto& [origin, bucket] : by_origin_) out.insert(out.end(), bucket.begin(), bucket.end());
  return out;
}

std::vector<Cookie> CookieJar::cookies_for_origin(std::string_view origin) const {
  std::lock_guard lock(mutex_);
  auto it = by_origin_.find(origin);
  return it == by_origin_.end() ? std::vector<Cookie>{} : it->second;
}

std::optional<Cookie> CookieJar::find(std::string_view origin, std::string_view name) const {
  std::lock_guard lock(mutex_);
  auto it = by_origin_.find(origin);
  if (it == by_origin_.end()) return std::nullopt;
  for (const auto& c : it->second) {
    if (c.name == name) return c;
  }
  return std::nullopt;
}

std::size_t CookieJar::size() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [origin, bucket] : by_origin_) n += bucket.size();
  return n;
}

void CookieJar::clear() {
  std::lock_guard lock(mutex_);
  by_origin_.clear();
}

void CookieJar::clear_origin(std::string_view origin) {
  std::lock_guard lock(mutex_);
  if (auto it = by_origin_.find(origin); it != by_origin_.end()) by_origin_.erase(it);
}

}  // namespace clipportal
