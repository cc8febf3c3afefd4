#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clipportal/clip.hpp"
#include "clipportal/cookie_jar.hpp"
#include "clipportal/http_client.hpp"
#include "clipportal/portal_model.hpp"

namespace clipportal::client {

enum class StepCause { FetchFailed, FormNotFound, LinkNotFound, LoginRejected, EmptyClip };
std::string_view to_string(StepCause c);

class StepError : public std::runtime_error {
 public:
  StepError(std::size_t step, StepCause cause, const std::string& detail);
  std::size_t step() const { return step_; }
  StepCause cause() const { return cause_; }

 private:
  std::size_t step_;
  StepCause cause_;
};

class InitError : public std::runtime_error {
 public:
  enum class Kind { AuthError, NotFound, DescriptorError, Transport };
  InitError(Kind kind, const std::string& detail);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ChangeReport {
  std::size_t cycle = 0;
  std::string portlet_id;
  bool changed = false;
  std::string old_digest;
  std::string new_digest;
  std::uint64_t fetch_bytes = 0;
  std::optional<std::string> error;

  /// One JSON object, fields in declaration order.
  std::string to_json() const;
};

struct EmbeddedFetch {
  std::string url;
  int status = 0;
  std::size_t bytes = 0;
};

struct PortletState {
  std::optional<clip::PortletFragment> fragment;
  std::optional<Url> clip_url;  // page the last fragment was clipped from
  std::vector<EmbeddedFetch> embedded;
  std::optional<std::string> error;
};

struct RenderResult {
  std::vector<std::filesystem::path> written;    // files whose content changed
  std::vector<std::filesystem::path> unchanged;
  std::size_t failed_portlets = 0;
};

struct WatchSummary {
  std::size_t cycles = 0;
  std::size_t reports = 0;
  std::size_t changed = 0;
  std::size_t errors = 0;
  std::uint64_t server_requests = 0;  // portal-server requests made during the watch
  std::uint64_t server_bytes = 0;
  std::map<std::string, http::TrafficStats> traffic;  // per source origin, whole session

  std::string to_json() const;
};

struct SessionOptions {
  std::string ca_cert_pem;  // trust anchor for the portal server
  bool verify_tls = true;
  int timeout_seconds = 10;
};

/// Client side of the portal: initializes from the portal server, then talks
/// only to producer sites. All methods are safe to call concurrently for
/// different portlets.
class ClientSession {
 public:
  /// Logs in, fetches the descriptor and the credentials of every portlet
  /// that names a credential_ref. Throws InitError.
  ClientSession(const std::string& server_url, const std::string& portal_id, const std::string& user,
                const std::string& pass, SessionOptions options = {});
  ~ClientSession();

  const model::PortalDescriptor& descriptor() const { return descriptor_; }
  const std::map<std::string, model::CredentialEntry>& credentials() const { return credentials_; }
  CookieJar& jar() { return jar_; }
  const CookieJar& jar() const { return jar_; }

  /// Runs the portlet's workflow from the first step. Throws StepError.
  clip::PortletFragment run_workflow(const std::string& portlet_id);
  /// Re-fetches and re-clips, skipping login while the session still holds.
  ChangeReport refresh(const std::string& portlet_id, std::size_t cycle = 0);
  /// Runs every portlet (concurrently); failures are recorded per portlet.
  std::vector<ChangeReport> run_all();
  /// Refreshes the selected portlets concurrently; reports in completion order.
  std::vector<ChangeReport> refresh_many(const std::vector<std::string>& portlet_ids, std::size_t cycle);

  /// Writes portal.html and portlet-<id>.html. Files are rewritten only when
  /// their content changes.
  RenderResult render_portal(const std::filesystem::path& output_dir) const;
  std::string render_portal_html() const;

  /// Refreshes interval-policy portlets `cycles` times, `interval` apart.
  WatchSummary watch(std::size_t cycles, std::chrono::milliseconds interval,
                     const std::function<void(const ChangeReport&)>& on_report = {});

  PortletState state(const std::string& portlet_id) const;
  std::optional<std::string> digest(const std::string& portlet_id) const;

  http::TrafficStats server_traffic() const;
  std::map<std::string, http::TrafficStats> source_traffic() const;
  const std::string& server_origin() const { return server_origin_; }

 private:
  clip::PortletFragment execute(const model::PortletDefinition& def, std::size_t first_step,
                                std::optional<Url> start, std::uint64_t* bytes);
  clip::PortletFragment clip_page(const model::PortletDefinition& def, const http::Response& page,
                                  std::size_t step);
  void fetch_embedded(const std::string& portlet_id, const clip::PortletFragment& fragment);
  const model::PortletDefinition& portlet(const std::string& portlet_id) const;

  std::string server_origin_;
  model::PortalDescriptor descriptor_;
  std::map<std::string, model::CredentialEntry> credentials_;
  CookieJar jar_;
  std::unique_ptr<http::Client> server_;
  std::unique_ptr<http::Client> sources_;

  mutable std::mutex state_mutex_;
  std::map<std::string, PortletState> states_;
};

/// Successful controls of a form in document order (name, value).
std::vector<std::pair<std::string, std::string>> form_controls(const html::Node& form);

std::string cookie_header_for(const CookieJar& jar, const Url& url);

}  // namespace clipportal::client
