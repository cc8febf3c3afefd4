#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "clipportal/html_tree.hpp"
#include "clipportal/url.hpp"
#include "clipportal/xpath.hpp"

namespace clipportal::clip {

enum class SanitizePolicy { strict, trusted };

std::string_view to_string(SanitizePolicy p);
std::optional<SanitizePolicy> parse_policy(std::string_view text);

/// Cosmetic adaptation applied to nodes matched by a change rule.
struct ChangeSpec {
  enum class Kind { set_attr, remove_attr, replace_text };
  Kind kind = Kind::set_attr;
  std::string name;     // attribute name, or the text to find for replace_text
  std::string value;    // attribute value, or the replacement literal

  static ChangeSpec set_attr(std::string name, std::string value) {
    return {Kind::set_attr, std::move(name), std::move(value)};
  }
  static ChangeSpec remove_attr(std::string name) { return {Kind::remove_attr, std::move(name), {}}; }
  static ChangeSpec replace_text(std::string find, std::string replacement) {
    return {Kind::replace_text, std::move(find), std::move(replacement)};
  }

  bool operator==(const ChangeSpec&) const = default;
};

struct ClipRule {
  enum class Kind { select, cut, change };
  Kind kind = Kind::select;
  std::string source;       // path as written
  xpath::XPathExpr path;
  std::optional<ChangeSpec> change;

  static ClipRule select(std::string_view path);
  static ClipRule cut(std::string_view path);
  static ClipRule make_change(std::string_view path, ChangeSpec spec);

  bool operator==(const ClipRule& o) const {
    return kind == o.kind && path == o.path && change == o.change;
  }
};

struct PortletFragment {
  std::string html;
  std::string source_origin;
  std::string digest;  // SHA-256 hex of the normalized html
  std::chrono::system_clock::time_point clipped_at;
  std::size_t node_count = 0;
  std::size_t sanitize_removals = 0;
  std::size_t unresolved_links = 0;
};

/// No select rule matched anything: the configured path has gone stale.
class EmptyClip : public std::runtime_error {
 public:
  EmptyClip() : std::runtime_error("EmptyClip: no select rule matched") {}
};

/// Select (union, document order), then cut, then change, then rebase links,
/// then sanitize, then digest. Throws EmptyClip when no select rule matched.
/// Throws std::invalid_argument when `rules` holds no select rule.
PortletFragment apply_clip(const html::Document& doc, const std::vector<ClipRule>& rules,
                           SanitizePolicy policy);

/// Resolves relative href/src/action values under `container` against
/// `base`. Absolute and fragment-only values are left alone. Returns the
/// number of values that could not be resolved (left as-is).
std::size_t rebase_links(html::Node& container, const Url& base);

/// Strict removes script elements, on* attributes, javascript: URLs and
/// object/embed/applet elements; trusted keeps object/embed/applet.
/// Returns the number of removals.
std::size_t sanitize(html::Node& container, SanitizePolicy policy);

/// Canonical form used for change detection: comments dropped, whitespace
/// runs in text collapsed to one space and trimmed, empty text dropped.
std::string normalize_for_digest(std::string_view html);

std::string fragment_digest(std::string_view html);

/// Attributes that carry URLs and are rebased.
bool is_link_attribute(std::string_view name);

}  // namespace clipportal::clip
