#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clipportal/clip.hpp"
#include "clipportal/crypto.hpp"
#include "clipportal/url.hpp"
#include "clipportal/xpath.hpp"

namespace clipportal::model {

enum class RefreshPolicy { manual, interval };
enum class PortletMode { view, edit, help };
enum class WindowState { normal, minimized, maximized };

std::string_view to_string(RefreshPolicy p);
std::string_view to_string(PortletMode m);
std::string_view to_string(WindowState s);

inline constexpr std::string_view kUserPlaceholder = "{user}";
inline constexpr std::string_view kPassPlaceholder = "{pass}";

struct WorkflowStep {
  enum class Kind { get, submit_form, follow_link, clip };
  Kind kind = Kind::clip;
  std::string url;                // get
  std::string path_source;        // submit_form: form path, follow_link: link path
  xpath::XPathExpr path;
  std::vector<std::pair<std::string, std::string>> fields;  // submit_form, in order

  static WorkflowStep get(std::string url);
  static WorkflowStep submit_form(std::string_view form_path,
                                  std::vector<std::pair<std::string, std::string>> fields);
  static WorkflowStep follow_link(std::string_view link_path);
  static WorkflowStep clip();

  bool uses_placeholders() const;
  bool operator==(const WorkflowStep& o) const {
    return kind == o.kind && url == o.url && path == o.path && fields == o.fields;
  }
};

std::string_view to_string(WorkflowStep::Kind k);

struct RefreshSpec {
  RefreshPolicy policy = RefreshPolicy::interval;
  std::uint32_t interval_seconds = 60;
  bool operator==(const RefreshSpec&) const = default;
};

struct PortletDefinition {
  std::string portlet_id;
  std::string title;
  std::string source_url;
  std::vector<clip::ClipRule> clip_rules;
  std::vector<WorkflowStep> workflow;  // empty means [get(source_url), clip]
  std::optional<std::string> credential_ref;
  RefreshSpec refresh;
  clip::SanitizePolicy sanitize_policy = clip::SanitizePolicy::strict;
  PortletMode mode = PortletMode::view;
  WindowState window_state = WindowState::normal;

  /// The workflow that runs, with the implicit default filled in.
  std::vector<WorkflowStep> effective_workflow() const;
  bool operator==(const PortletDefinition&) const = default;
};

struct PortalDescriptor {
  std::string portal_id;
  std::string title;
  std::vector<std::vector<std::string>> layout;
  std::map<std::string, PortletDefinition> portlets;
  std::uint64_t version = 1;

  /// Origins of all portlet source and workflow URLs.
  std::vector<std::string> source_origins() const;
  bool operator==(const PortalDescriptor&) const = default;
};

struct Problem {
  enum class Kind { schema, reference, rule, workflow };
  Kind kind;
  std::string location;  // JSON-pointer-like path, e.g. /portlets/news/clip_rules/0/path
  std::string message;
  std::optional<std::size_t> offset;  // rule problems: XPath syntax error offset
};

std::string_view to_string(Problem::Kind k);

/// Loading or mutating a descriptor failed; `problems()` lists every issue found.
class DescriptorError : public std::runtime_error {
 public:
  explicit DescriptorError(std::vector<Problem> problems);
  const std::vector<Problem>& problems() const { return problems_; }
  bool has(Problem::Kind k) const;

 private:
  std::vector<Problem> problems_;
};

class DuplicatePortlet : public std::runtime_error {
 public:
  explicit DuplicatePortlet(const std::string& id) : std::runtime_error("duplicate portlet_id: " + id) {}
};

PortalDescriptor load_descriptor(std::string_view json_text);
std::string serialize_descriptor(const PortalDescriptor& d);

PortletDefinition portlet_from_json(std::string_view portlet_id, std::string_view json_text);
std::string portlet_to_json(const PortletDefinition& p);

/// Workflow invariants: exactly one clip step, last; credential_ref present
/// iff a submit_form field uses a placeholder; interval >= 1 s; at least one
/// select rule; absolute source URL. Returns human readable errors.
std::vector<std::string> validate_workflow(const PortletDefinition& def);

/// Full descriptor validation (workflows plus layout references).
std::vector<Problem> validate_descriptor(const PortalDescriptor& d);

/// Each mutation returns a new descriptor with version + 1.
PortalDescriptor with_portlet_added(const PortalDescriptor& d, PortletDefinition def);
PortalDescriptor with_portlet_replaced(const PortalDescriptor& d, PortletDefinition def);
PortalDescriptor with_portlet_removed(const PortalDescriptor& d, std::string_view portlet_id);
PortalDescriptor with_window_state(const PortalDescriptor& d, std::string_view portlet_id, WindowState s);

struct CredentialEntry {
  std::string service_id;
  std::string username;
  std::string password;
  std::vector<std::pair<std::string, std::string>> extra_fields;
  bool operator==(const CredentialEntry&) const = default;
};

std::string credential_to_json(const CredentialEntry& e);
CredentialEntry credential_from_json(std::string_view text);

class AuthError : public std::runtime_error {
 public:
  explicit AuthError(const std::string& what) : std::runtime_error(what) {}
};

class NotFound : public std::runtime_error {
 public:
  explicit NotFound(const std::string& what) : std::runtime_error("not found: " + what) {}
};

/// Encrypted credential store.
///
/// File layout: "CDV1" | salt (16) | nonce (12) | AES-256-GCM(ciphertext) | tag (16).
/// The 32-byte header is authenticated as associated data; the key is
/// PBKDF2-HMAC-SHA256(passphrase, salt). Every write draws a fresh nonce.
class Vault {
 public:
  static constexpr unsigned kKdfIterations = 200000;

  /// Opens `path`, creating an empty vault if the file does not exist.
  /// Throws AuthError on a wrong passphrase or any corruption.
  Vault(std::filesystem::path path, std::string_view passphrase);

  void put(const CredentialEntry& entry);
  /// Throws NotFound.
  CredentialEntry get(std::string_view service_id) const;
  bool contains(std::string_view service_id) const;
  bool erase(std::string_view service_id);
  std::vector<std::string> services() const;
  const std::filesystem::path& path() const { return path_; }

  /// Decrypts a vault image; throws AuthError on any failure.
  static std::map<std::string, CredentialEntry> open_image(std::string_view image, std::string_view passphrase);
  static std::string seal_image(const std::map<std::string, CredentialEntry>& entries,
                                std::string_view passphrase);

 private:
  void persist();

  std::filesystem::path path_;
  crypto::Bytes salt_;
  crypto::Bytes key_;
  std::map<std::string, CredentialEntry> entries_;
  mutable std::mutex mutex_;
};

}  // namespace clipportal::model
