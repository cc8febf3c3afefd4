#include "clipportal/url.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <vector>

namespace clipportal {

namespace {

bool is_ascii_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ascii_ws(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Generic RFC 3986 reference components.
struct Components {
  std::optional<std::string> scheme;
  std::optional<std::string> authority;
  std::string path;
  std::optional<std::string> query;
  std::optional<std::string> fragment;
};

std::size_t scheme_length(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == ':') return i;
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return 0;
  }
  return 0;
}

Components split(std::string_view s) {
  Components c;
  if (auto n = scheme_length(s); n > 0) {
    c.scheme = lower(s.substr(0, n));
    s.remove_prefix(n + 1);
  }
  if (auto hash = s.find('#'); hash != std::string_view::npos) {
    c.fragment = std::string(s.substr(hash + 1));
    s = s.substr(0, hash);
  }
  if (auto q = s.find('?'); q != std::string_view::npos) {
    c.query = std::string(s.substr(q + 1));
    s = s.substr(0, q);
  }
  if (s.starts_with("//")) {
    s.remove_prefix(2);
    auto slash = s.find('/');
    c.authority = std::string(s.substr(0, slash));
    s = slash == std::string_view::npos ? std::string_view{} : s.substr(slash);
  }
  c.path = std::string(s);
  return c;
}

struct Authority {
  std::string userinfo;
  std::string host;
  std::optional<std::uint16_t> port;
};

std::optional<Authority> parse_authority(std::string_view a) {
  Authority out;
  if (auto at = a.rfind('@'); at != std::string_view::npos) {
    out.userinfo = std::string(a.substr(0, at));
    a.remove_prefix(at + 1);
  }
  std::string_view host = a;
  std::string_view port;
  if (a.starts_with('[')) {
    auto close = a.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = a.substr(0, close + 1);
    auto rest = a.substr(close + 1);
    if (!rest.empty()) {
      if (rest[0] != ':') return std::nullopt;
      port = rest.substr(1);
    }
  } else if (auto colon = a.rfind(':'); colon != std::string_view::npos) {
    host = a.substr(0, colon);
    port = a.substr(colon + 1);
  }
  if (host.empty()) return std::nullopt;
  for (char ch : host) {
    if (is_ascii_ws(ch) || ch == '/' || ch == '\\' || ch == '<' || ch == '>' || ch == '"') {
      return std::nullopt;
    }
  }
  out.host = lower(host);
  if (!port.empty()) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) return std::nullopt;
    out.port = static_cast<std::uint16_t>(value);
  }
  return out;
}

std::string remove_dot_segments(std::string_view input) {
  std::vector<std::string_view> out;
  bool absolute = input.starts_with('/');
  std::string_view rest = absolute ? input.substr(1) : input;
  bool trailing_slash = false;
  while (true) {
    auto slash = rest.find('/');
    std::string_view seg = rest.substr(0, slash);
    bool last = slash == std::string_view::npos;
    if (seg == ".") {
      trailing_slash = last;
    } else if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing_slash = last;
    } else {
      out.push_back(seg);
      trailing_slash = false;
    }
    if (last) break;
    rest = rest.substr(slash + 1);
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) result += '/';
    result += out[i];
  }
  if (trailing_slash && !result.empty() && result.back() != '/') result += '/';
  return result;
}

std::string merge_paths(const Url& base, std::string_view ref_path) {
  if (base.path.empty()) return "/" + std::string(ref_path);
  auto slash = base.path.rfind('/');
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

std::optional<Url> from_components(Components c) {
  if (!c.scheme || !c.authority) return std::nullopt;
  auto auth = parse_authority(*c.authority);
  if (!auth) return std::nullopt;
  Url u;
  u.scheme = *c.scheme;
  u.userinfo = std::move(auth->userinfo);
  u.host = std::move(auth->host);
  u.port = auth->port;
  u.path = c.path.empty() ? "/" : remove_dot_segments(c.path);
  u.query = std::move(c.query);
  u.fragment = std::move(c.fragment);
  return u;
}

}  // namespace

std::optional<Url> Url::parse(std::string_view text) {
  return from_components(split(trim(text)));
}

Url Url::parse_or_throw(std::string_view text) {
  auto u = parse(text);
  if (!u) throw InvalidUrl(std::string(text));
  return *u;
}

std::uint16_t Url::effective_port() const {
  if (port) return *port;
  if (scheme == "https") return 443;
  if (scheme == "http") return 80;
  return 0;
}

std::string Url::host_port() const {
  std::string out = host;
  if (port) out += ":" + std::to_string(*port);
  return out;
}

std::string Url::origin() const {
  std::string out = scheme + "://" + host;
  bool default_port = (scheme == "http" && effective_port() == 80) ||
                      (scheme == "https" && effective_port() == 443);
  if (port && !default_port) out += ":" + std::to_string(*port);
  return out;
}

std::string Url::target() const {
  std::string out = path.empty() ? "/" : path;
  if (query) out += "?" + *query;
  return out;
}

std::string Url::str() const {
  std::string out = scheme + "://";
  if (!userinfo.empty()) out += userinfo + "@";
  out += host_port();
  out += target();
  if (fragment) out += "#" + *fragment;
  return out;
}

bool has_scheme(std::string_view reference) {
  return scheme_length(trim(reference)) > 0;
}

std::string scheme_of(std::string_view reference) {
  reference = trim(reference);
  auto n = scheme_length(reference);
  return n ? lower(reference.substr(0, n)) : std::string{};
}

std::optional<Url> resolve(const Url& base, std::string_view reference) {
  Components r = split(trim(reference));
  Components t;
  if (r.scheme) {
    return from_components(std::move(r));
  }
  if (r.authority) {
    t.authority = r.authority;
    t.path = r.path;
    t.query = r.query;
  } else {
    t.authority = base.userinfo.empty() ? base.host_port() : base.userinfo + "@" + base.host_port();
    if (r.path.empty()) {
      t.path = base.path;
      t.query = r.query ? r.query : base.query;
    } else {
      t.path = r.path.starts_with('/') ? r.path : merge_paths(base, r.path);
      t.query = r.query;
    }
  }
  t.scheme = base.scheme;
  t.fragment = r.fragment;
  return from_components(std::move(t));
}

std::string percent_encode_form(std::string_view text) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(text.size());
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '*') {
      out += static_cast<char>(c);
    } else if (c == ' ') {
      out += '+';
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

std::string percent_decode(std::string_view text, bool plus_as_space) {
  std::string out;
  out.reserve(text.size());
  auto hexval = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '%' && i + 2 < text.size()) {
      int hi = hexval(text[i + 1]);
      int lo = hexval(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += (plus_as_space && c == '+') ? ' ' : c;
  }
  return out;
}

bool is_loopback_address(std::string_view host) {
  if (host.starts_with("[") && host.ends_with("]")) host = host.substr(1, host.size() - 2);
  if (host == "::1" || host == "localhost") return true;
  if (host.starts_with("::ffff:")) host.remove_prefix(7);
  return host.starts_with("127.");
}

}  // namespace clipportal
