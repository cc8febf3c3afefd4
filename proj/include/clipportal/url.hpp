#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clipportal {

class InvalidUrl : public std::runtime_error {
 public:
  explicit InvalidUrl(const std::string& what)
      : std::runtime_error("invalid URL: " + what) {}
};

/// An absolute hierarchical URL (scheme "://" authority path [? query] [# fragment]).
///
/// Scheme and host are stored lowercase. `port` is empty when the URL
/// does not carry one; `effective_port()` fills in the scheme default.
struct Url {
  std::string scheme;
  std::string userinfo;
  std::string host;
  std::optional<std::uint16_t> port;
  std::string path = "/";
  std::optional<std::string> query;
  std::optional<std::string> fragment;

  /// Parses an absolute URL. Returns nullopt for relative references,
  /// non-hierarchical schemes (mailto:, javascript:) or malformed authorities.
  static std::optional<Url> parse(std::string_view text);

  /// Like parse() but throws InvalidUrl.
  static Url parse_or_throw(std::string_view text);

  std::uint16_t effective_port() const;
  std::string host_port() const;
  /// scheme://host[:port], default ports omitted.
  std::string origin() const;
  /// path[?query]
  std::string target() const;
  std::string str() const;
  bool is_secure() const { return scheme == "https"; }

  bool operator==(const Url&) const = default;
};

/// Resolves `reference` against `base` per RFC 3986 section 5.2.
/// Leading and trailing ASCII whitespace of the reference is ignored.
/// Returns nullopt when the reference cannot be parsed; the result for a
/// non-hierarchical absolute reference (e.g. "mailto:x") is also nullopt,
/// use has_scheme() to tell those apart.
std::optional<Url> resolve(const Url& base, std::string_view reference);

/// True when the reference starts with a syntactically valid scheme.
bool has_scheme(std::string_view reference);

/// Lowercased scheme of the reference, or empty if none.
std::string scheme_of(std::string_view reference);

std::string percent_encode_form(std::string_view text);
std::string percent_decode(std::string_view text, bool plus_as_space = false);

bool is_loopback_address(std::string_view host);

}  // namespace clipportal
