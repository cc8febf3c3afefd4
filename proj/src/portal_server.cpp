#include "clipportal/portal_server.hpp"

#include <cstdlib>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "clipportal/crypto.hpp"
#include "clipportal/http_client.hpp"

namespace clipportal::server {

using json = nlohmann::ordered_json;
using Clock = std::chrono::system_clock;

namespace {

constexpr std::string_view kRedacted = "[redacted]";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& p, const std::string& content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

std::string iso_time(Clock::time_point t) {
  std::time_t tt = Clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TrafficClass classify(const std::string& path) {
  if (path == "/api/login") return TrafficClass::auth;
  if (path.starts_with("/api/portal/")) {
    if (path.find("/credentials/") != std::string::npos) return TrafficClass::credentials;
    return TrafficClass::descriptor;
  }
  if (path == "/api/relay") return TrafficClass::relay;
  if (path.starts_with("/api/admin/") || path == "/api/stats") return TrafficClass::admin;
  return TrafficClass::assets;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message = {}) {
  json j{{"error", code}};
  if (!message.empty()) j["message"] = message;
  send_json(res, status, j);
}

std::string content_type_for(const std::filesystem::path& p) {
  static const std::map<std::string, std::string> types = {
      {".html", "text/html; charset=utf-8"}, {".js", "text/javascript"}, {".mjs", "text/javascript"},
      {".css", "text/css"},  {".json", "application/json"}, {".svg", "image/svg+xml"},
      {".png", "image/png"}, {".ico", "image/x-icon"},      {".map", "application/json"}};
  auto it = types.find(p.extension().string());
  return it == types.end() ? "application/octet-stream" : it->second;
}

const char* kUiStub = R"(<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>Portal</title></head>
<body>
<h1>Portal UI not installed</h1>
<p>Static assets for the browser portal are served from the directory named by
<code>ui.dir</code> in server.toml. The HTTP API is available:</p>
<ul>
<li>POST /api/login</li>
<li>GET /api/portal/{id}/descriptor</li>
<li>GET /api/portal/{id}/credentials/{portlet}</li>
<li>GET /api/relay?target=...</li>
<li>GET /api/stats</li>
</ul>
</body></html>
)";

struct Session {
  std::string user;
  bool admin = false;
  Clock::time_point expires;
};

struct PortalState {
  std::shared_ptr<const model::PortalDescriptor> descriptor;
  std::string text;
  std::filesystem::path file;
};

}  // namespace

std::string_view to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::auth: return "auth";
    case TrafficClass::descriptor: return "descriptor";
    case TrafficClass::credentials: return "credentials";
    case TrafficClass::assets: return "assets";
    case TrafficClass::relay: return "relay";
    case TrafficClass::admin: return "admin";
  }
  return "?";
}

TrafficCounter TrafficSnapshot::total() const {
  TrafficCounter t;
  for (const auto& c : classes) {
    t.bytes_in += c.bytes_in;
    t.bytes_out += c.bytes_out;
    t.request_count += c.request_count;
  }
  return t;
}

std::string TrafficSnapshot::to_json() const {
  json j = json::object();
  for (std::size_t i = 0; i < kTrafficClasses; ++i) {
    const auto& c = classes[i];
    j[std::string(server::to_string(static_cast<TrafficClass>(i)))] =
        json{{"bytes_out", c.bytes_out}, {"bytes_in", c.bytes_in}, {"request_count", c.request_count}};
  }
  return j.dump();
}

std::string LogEntry::to_json() const {
  json headers = json::array();
  for (const auto& [k, v] : request_headers) headers.push_back(json::array({k, v}));
  return json{{"time", time},
              {"remote", remote_addr},
              {"method", method},
              {"target", target},
              {"status", status},
              {"class", server::to_string(traffic_class)},
              {"bytes_in", bytes_in},
              {"bytes_out", bytes_out},
              {"request_headers", headers},
              {"request_body", request_body},
              {"response_body", response_body}}
      .dump();
}

struct PortalServer::Impl {
  ServerConfig cfg;
  std::unique_ptr<httplib::Server> http;
  std::unique_ptr<model::Vault> vault;

  mutable std::mutex portals_mutex;
  std::map<std::string, std::shared_ptr<const PortalState>> portals;
  std::mutex admin_mutex;

  std::mutex sessions_mutex;
  std::map<std::string, Session> sessions;
  std::map<std::string, std::deque<Clock::time_point>> failures;

  struct AtomicCounter {
    std::atomic<std::uint64_t> bytes_out{0}, bytes_in{0}, requests{0};
  };
  std::array<AtomicCounter, kTrafficClasses> counters;

  mutable std::mutex log_mutex;
  std::vector<LogEntry> log;
  std::ofstream log_file;

  explicit Impl(ServerConfig c) : cfg(std::move(c)) {}

  std::shared_ptr<const PortalState> portal(const std::string& id) const {
    std::lock_guard lock(portals_mutex);
    auto it = portals.find(id);
    return it == portals.end() ? nullptr : it->second;
  }

  void install(const std::string& id, model::PortalDescriptor d, const std::filesystem::path& file) {
    auto st = std::make_shared<PortalState>();
    st->text = model::serialize_descriptor(d);
    st->descriptor = std::make_shared<const model::PortalDescriptor>(std::move(d));
    st->file = file;
    std::lock_guard lock(portals_mutex);
    portals[id] = std::move(st);
  }

  std::vector<std::string> allowlist() const {
    if (cfg.relay_allowlist == "none") return {};
    std::set<std::string> out;
    std::lock_guard lock(portals_mutex);
    for (const auto& [id, st] : portals) {
      for (auto& o : st->descriptor->source_origins()) out.insert(o);
    }
    return {out.begin(), out.end()};
  }

  std::optional<Session> session_for(const httplib::Request& req) {
    auto auth = req.get_header_value("Authorization");
    if (!auth.starts_with("Bearer ")) return std::nullopt;
    std::string token = auth.substr(7);
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(token);
    if (it == sessions.end()) return std::nullopt;
    if (it->second.expires <= Clock::now()) {
      sessions.erase(it);
      return std::nullopt;
    }
    return it->second;
  }

  bool secrets_allowed(const httplib::Request& req) const {
    return req.ssl != nullptr || is_loopback_address(req.remote_addr);
  }

  void account(const httplib::Request& req, const httplib::Response& res) {
    TrafficClass cls = classify(req.path);
    std::uint64_t in = req.method.size() + req.target.size() + 12 + req.body.size();
    for (const auto& [k, v] : req.headers) {
      if (k == "REMOTE_ADDR" || k == "REMOTE_PORT" || k == "LOCAL_ADDR" || k == "LOCAL_PORT") continue;
      in += k.size() + v.size() + 4;
    }
    std::uint64_t out = 15 + std::string_view(httplib::status_message(res.status)).size() + 2 + res.body.size();
    for (const auto& [k, v] : res.headers) out += k.size() + v.size() + 4;

    auto& c = counters[static_cast<std::size_t>(cls)];
    c.bytes_in += in;
    c.bytes_out += out;
    c.requests += 1;

    LogEntry e;
    e.time = iso_time(Clock::now());
    e.remote_addr = req.remote_addr;
    e.method = req.method;
    e.target = req.target;
    e.status = res.status;
    e.traffic_class = cls;
    e.bytes_in = in;
    e.bytes_out = out;
    for (const auto& [k, v] : req.headers) {
      if (k == "Authorization") {
        e.request_headers.emplace_back(k, std::string(kRedacted));
      } else if (k != "REMOTE_ADDR" && k != "REMOTE_PORT" && k != "LOCAL_ADDR" && k != "LOCAL_PORT") {
        e.request_headers.emplace_back(k, v);
      }
    }
    switch (cls) {
      case TrafficClass::auth:
        e.request_body = std::string(kRedacted);
        e.response_body = res.status == 200 ? std::string(kRedacted) : res.body;
        break;
      case TrafficClass::credentials:
        e.request_body = req.body;
        e.response_body = res.status == 200 ? std::string(kRedacted) : res.body;
        break;
      case TrafficClass::admin:
        e.request_body = req.body.empty() ? "" : std::string(kRedacted);
        e.response_body = res.body;
        break;
      case TrafficClass::relay:
      case TrafficClass::assets:
        e.request_body = req.body;
        e.response_body = "sha256:" + crypto::sha256_hex(res.body);
        break;
      case TrafficClass::descriptor:
        e.request_body = req.body;
        e.response_body = res.body;
        break;
    }
    std::lock_guard lock(log_mutex);
    if (log_file.is_open()) log_file << e.to_json() << '\n' << std::flush;
    log.push_back(std::move(e));
  }

  void handle_login(const httplib::Request& req, httplib::Response& res) {
    if (!secrets_allowed(req)) return send_error(res, 403, "InsecureTransport");
    const auto now = Clock::now();
    {
      std::lock_guard lock(sessions_mutex);
      auto& f = failures[req.remote_addr];
      while (!f.empty() && f.front() + cfg.rate_limit_window <= now) f.pop_front();
      if (static_cast<int>(f.size()) >= cfg.rate_limit_failures) {
        res.set_header("Retry-After", std::to_string(
                                          std::chrono::duration_cast<std::chrono::seconds>(
                                              f.front() + cfg.rate_limit_window - now).count() + 1));
        return send_error(res, 429, "RateLimited");
      }
    }
    std::string user, pass;
    try {
      auto j = json::parse(req.body);
      user = j.at("user").get<std::string>();
      pass = j.at("pass").get<std::string>();
    } catch (const std::exception&) {
      return send_error(res, 400, "BadRequest", "expected {\"user\": ..., \"pass\": ...}");
    }
    const PortalUser* match = nullptr;
    for (const auto& u : cfg.users) {
      if (u.name == user) match = &u;
    }
    bool ok = match != nullptr && verify_password(*match, pass);
    std::lock_guard lock(sessions_mutex);
    if (!ok) {
      failures[req.remote_addr].push_back(now);
      return send_error(res, 401, "AuthError");
    }
    std::string token = crypto::random_token();
    sessions[token] = Session{match->name, match->admin, now + cfg.token_ttl};
    send_json(res, 200, json{{"token", token}, {"expires_in", cfg.token_ttl.count()}});
  }

  void handle_descriptor(const httplib::Request& req, httplib::Response& res) {
    if (!session_for(req)) return send_error(res, 401, "AuthError");
    auto st = portal(req.path_params.at("id"));
    if (!st) return send_error(res, 404, "NotFound", "unknown portal");
    res.set_header("X-Portal-Version", std::to_string(st->descriptor->version));
    if (req.has_param("if_version")) {
      if (req.get_param_value("if_version") == std::to_string(st->descriptor->version)) {
        res.status = 304;
        return;
      }
    }
    res.status = 200;
    res.set_content(st->text, "application/json");
  }

  void handle_credentials(const httplib::Request& req, httplib::Response& res) {
    if (!session_for(req)) return send_error(res, 401, "AuthError");
    if (!secrets_allowed(req)) return send_error(res, 403, "InsecureTransport");
    auto st = portal(req.path_params.at("id"));
    if (!st) return send_error(res, 404, "NotFound", "unknown portal");
    auto it = st->descriptor->portlets.find(req.path_params.at("portlet"));
    if (it == st->descriptor->portlets.end()) return send_error(res, 404, "NotFound", "unknown portlet");
    if (!it->second.credential_ref) return send_error(res, 404, "NotFound", "portlet has no credentials");
    if (!vault) return send_error(res, 503, "VaultUnavailable");
    try {
      auto entry = vault->get(*it->second.credential_ref);
      res.set_header("Cache-Control", "no-store");
      res.status = 200;
      res.set_content(model::credential_to_json(entry), "application/json");
    } catch (const model::NotFound&) {
      send_error(res, 404, "NotFound", "credential entry missing from vault");
    }
  }

  void handle_admin_put(const httplib::Request& req, httplib::Response& res) {
    auto s = session_for(req);
    if (!s) return send_error(res, 401, "AuthError");
    if (!s->admin) return send_error(res, 403, "Forbidden", "admin role required");
    if (!secrets_allowed(req)) return send_error(res, 403, "InsecureTransport");
    const std::string id = req.path_params.at("id");
    const std::string pid = req.path_params.at("portlet");

    json body;
    try {
      body = json::parse(req.body);
    } catch (const std::exception&) {
      return send_error(res, 400, "BadRequest", "malformed JSON");
    }
    if (!body.is_object() || !body.contains("portlet")) {
      return send_error(res, 400, "BadRequest", "expected {\"portlet\": {...}, \"credential\": {...}?}");
    }
    bool replace = body.value("replace", false);

    std::lock_guard lock(admin_mutex);
    auto st = portal(id);
    if (!st) return send_error(res, 404, "NotFound", "unknown portal");
    model::PortletDefinition def;
    try {
      def = model::portlet_from_json(pid, body.at("portlet").dump());
    } catch (const model::DescriptorError& e) {
      json problems = json::array();
      for (const auto& p : e.problems()) {
        json pj{{"kind", model::to_string(p.kind)}, {"location", p.location}, {"message", p.message}};
        if (p.offset) pj["offset"] = *p.offset;
        problems.push_back(pj);
      }
      return send_json(res, 422, json{{"error", "ValidationError"}, {"problems", problems}});
    }
    std::optional<model::CredentialEntry> cred;
    if (body.contains("credential") && !body.at("credential").is_null()) {
      if (!def.credential_ref) {
        return send_error(res, 422, "ValidationError", "credential given but portlet has no credential_ref");
      }
      try {
        const json& c = body.at("credential");
        model::CredentialEntry e;
        e.service_id = *def.credential_ref;
        e.username = c.at("username").get<std::string>();
        e.password = c.at("password").get<std::string>();
        if (c.contains("extra_fields")) {
          for (const auto& [k, v] : c.at("extra_fields").items()) e.extra_fields.emplace_back(k, v.get<std::string>());
        }
        cred = std::move(e);
      } catch (const std::exception&) {
        return send_error(res, 400, "BadRequest", "credential needs username and password strings");
      }
    }
    if (def.credential_ref && !cred && (!vault || !vault->contains(*def.credential_ref))) {
      return send_error(res, 422, "ValidationError", "credential_ref names no stored credential; supply one");
    }
    model::PortalDescriptor next;
    try {
      next = replace && st->descriptor->portlets.contains(pid) ? model::with_portlet_replaced(*st->descriptor, def)
                                                                : model::with_portlet_added(*st->descriptor, def);
    } catch (const model::DuplicatePortlet& e) {
      return send_error(res, 409, "Conflict", e.what());
    } catch (const model::DescriptorError& e) {
      return send_error(res, 422, "ValidationError", e.what());
    }
    if (cred) {
      if (!vault) return send_error(res, 503, "VaultUnavailable");
      vault->put(*cred);
    }
    if (!st->file.empty()) write_file_atomic(st->file, model::serialize_descriptor(next));
    std::uint64_t version = next.version;
    install(id, std::move(next), st->file);
    send_json(res, 200, json{{"portal_id", id}, {"portlet_id", pid}, {"version", version}});
  }

  void handle_admin_delete(const httplib::Request& req, httplib::Response& res) {
    auto s = session_for(req);
    if (!s) return send_error(res, 401, "AuthError");
    if (!s->admin) return send_error(res, 403, "Forbidden", "admin role required");
    const std::string id = req.path_params.at("id");
    std::lock_guard lock(admin_mutex);
    auto st = portal(id);
    if (!st) return send_error(res, 404, "NotFound", "unknown portal");
    try {
      auto next = model::with_portlet_removed(*st->descriptor, req.path_params.at("portlet"));
      if (!st->file.empty()) write_file_atomic(st->file, model::serialize_descriptor(next));
      std::uint64_t version = next.version;
      install(id, std::move(next), st->file);
      send_json(res, 200, json{{"portal_id", id}, {"version", version}});
    } catch (const model::NotFound&) {
      send_error(res, 404, "NotFound", "unknown portlet");
    }
  }

  void handle_relay(const httplib::Request& req, httplib::Response& res) {
    if (!session_for(req)) return send_error(res, 401, "AuthError");
    if (!cfg.relay_enabled) return send_error(res, 404, "RelayDisabled");
    auto target = Url::parse(req.get_param_value("target"));
    if (!target || (target->scheme != "http" && target->scheme != "https")) {
      return send_error(res, 400, "BadRequest", "target must be an absolute http(s) URL");
    }
    auto allowed = allowlist();
    if (std::find(allowed.begin(), allowed.end(), target->origin()) == allowed.end()) {
      return send_error(res, 403, "ForbiddenOrigin");
    }
    http::Client upstream(http::ClientOptions{.ca_cert_pem = {}, .verify_tls = true, .max_redirects = 0});
    http::Request up;
    up.url = *target;
    auto cookie = req.get_header_value("X-Relay-Cookie");
    if (!cookie.empty()) up.headers.emplace_back("Cookie", cookie);
    try {
      auto r = upstream.send(std::move(up), false);
      res.status = r.status;
      static const char* passed[] = {"Content-Type", "Location", "Set-Cookie", "ETag", "Last-Modified", "Cache-Control"};
      for (const char* name : passed) {
        for (const auto& v : r.headers_named(name)) res.headers.emplace(name, v);
      }
      auto ct = r.header("Content-Type").value_or("application/octet-stream");
      res.headers.erase("Content-Type");
      res.set_content(std::move(r.body), ct);
    } catch (const http::FetchError& e) {
      send_error(res, 502, "UpstreamUnreachable", e.what());
    }
  }

  void handle_ui(const httplib::Request& req, httplib::Response& res) {
    std::string rel = req.path.size() > 4 ? req.path.substr(4) : "";
    if (cfg.ui_dir.empty()) {
      if (rel.empty() || rel == "index.html") {
        res.set_content(kUiStub, "text/html; charset=utf-8");
      } else {
        send_error(res, 404, "NotFound");
      }
      return;
    }
    if (rel.empty()) rel = "index.html";
    std::filesystem::path p = std::filesystem::path(rel).lexically_normal();
    if (p.is_absolute() || p.empty() || *p.begin() == "..") return send_error(res, 404, "NotFound");
    auto full = cfg.ui_dir / p;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(full, ec)) return send_error(res, 404, "NotFound");
    res.set_content(read_file(full), content_type_for(full));
  }

  void routes() {
    auto& s = *http;
    s.Post("/api/login", [this](const auto& req, auto& res) { handle_login(req, res); });
    s.Get("/api/portal/:id/descriptor", [this](const auto& req, auto& res) { handle_descriptor(req, res); });
    s.Get("/api/portal/:id/credentials/:portlet",
          [this](const auto& req, auto& res) { handle_credentials(req, res); });
    s.Put("/api/admin/portal/:id/portlets/:portlet",
          [this](const auto& req, auto& res) { handle_admin_put(req, res); });
    s.Delete("/api/admin/portal/:id/portlets/:portlet",
             [this](const auto& req, auto& res) { handle_admin_delete(req, res); });
    s.Get("/api/relay", [this](const auto& req, auto& res) { handle_relay(req, res); });
    s.Get("/api/stats", [this](const auto& req, auto& res) {
      if (!session_for(req)) return send_error(res, 401, "AuthError");
      TrafficSnapshot snap;
      for (std::size_t i = 0; i < kTrafficClasses; ++i) {
        snap.classes[i] = {counters[i].bytes_out.load(), counters[i].bytes_in.load(), counters[i].requests.load()};
      }
      res.set_content(snap.to_json(), "application/json");
    });
    s.Get("/ui", [](const auto&, auto& res) { res.set_redirect("/ui/"); });
    s.Get(R"(/ui/.*)", [this](const auto& req, auto& res) { handle_ui(req, res); });
    s.Get("/", [](const auto&, auto& res) { res.set_redirect("/ui/"); });
    s.set_error_handler([](const auto&, auto& res) {
      if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "NotFound" : "Error");
    });
    s.set_exception_handler([](const auto&, auto& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, 500, "InternalError", what);
    });
    s.set_post_routing_handler([this](const auto& req, auto& res) { account(req, res); });
  }
};

PortalServer::PortalServer(ServerConfig config) : config_(std::move(config)), impl_(std::make_unique<Impl>(config_)) {
  if (!config_.tls && !config_.insecure_loopback) {
    throw std::runtime_error("plaintext serving requires insecure_loopback");
  }
  for (const auto& [id, file] : config_.portals) {
    auto d = model::load_descriptor(read_file(file));
    if (d.portal_id != id) {
      throw std::runtime_error("descriptor " + file.string() + " has portal_id \"" + d.portal_id +
                               "\" but is configured as \"" + id + "\"");
    }
    impl_->install(id, std::move(d), file);
  }
  if (!config_.vault_path.empty()) {
    std::string pass;
    if (config_.vault_passphrase) {
      pass = *config_.vault_passphrase;
    } else if (const char* env = std::getenv(config_.vault_passphrase_env.c_str())) {
      pass = env;
    } else {
      throw std::runtime_error("vault passphrase missing: set " + config_.vault_passphrase_env);
    }
    impl_->vault = std::make_unique<model::Vault>(config_.vault_path, pass);
  }
  if (!config_.request_log.empty()) {
    impl_->log_file.open(config_.request_log, std::ios::app);
    if (!impl_->log_file) throw std::runtime_error("cannot open request log " + config_.request_log.string());
  }

  if (config_.tls) {
    std::filesystem::path cert = config_.cert_path, key = config_.key_path;
    if (cert.empty() || key.empty()) {
      auto dir = std::filesystem::temp_directory_path() / ("clipportal-tls-" + crypto::random_token().substr(0, 12));
      std::filesystem::create_directories(dir);
      cert = dir / "cert.pem";
      key = dir / "key.pem";
    }
    if (!std::filesystem::exists(cert) || !std::filesystem::exists(key)) {
      std::vector<std::string> hosts;
      if (config_.listen_host != "127.0.0.1" && config_.listen_host != "localhost") hosts.push_back(config_.listen_host);
      auto generated = crypto::make_self_signed_cert(hosts);
      if (cert.has_parent_path()) std::filesystem::create_directories(cert.parent_path());
      write_file_atomic(cert, generated.cert_pem);
      write_file_atomic(key, generated.key_pem);
      std::filesystem::permissions(key, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
    }
    cert_pem_ = read_file(cert);
    fingerprint_ = crypto::certificate_fingerprint(cert_pem_);
    impl_->http = std::make_unique<httplib::SSLServer>(cert.c_str(), key.c_str());
    if (!impl_->http->is_valid()) throw std::runtime_error("TLS setup failed for " + cert.string());
  } else {
    impl_->http = std::make_unique<httplib::Server>();
  }
  impl_->http->set_keep_alive_max_count(1);
  impl_->routes();
}

PortalServer::~PortalServer() { stop(); }

std::uint16_t PortalServer::start() {
  auto& s = *impl_->http;
  if (config_.port == 0) {
    int p = s.bind_to_any_port(config_.listen_host);
    if (p <= 0) throw std::runtime_error("cannot bind " + config_.listen_host);
    port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!s.bind_to_port(config_.listen_host, config_.port)) {
      throw std::runtime_error("cannot bind " + config_.listen_host + ":" + std::to_string(config_.port));
    }
    port_ = config_.port;
  }
  thread_ = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return port_;
}

void PortalServer::stop() {
  if (impl_ && impl_->http) impl_->http->stop();
  if (thread_.joinable()) thread_.join();
}

std::string PortalServer::url() const {
  std::string host = config_.listen_host == "0.0.0.0" ? "127.0.0.1" : config_.listen_host;
  return std::string(config_.tls ? "https" : "http") + "://" + host + ":" + std::to_string(port_);
}

TrafficSnapshot PortalServer::stats() const {
  TrafficSnapshot snap;
  for (std::size_t i = 0; i < kTrafficClasses; ++i) {
    const auto& c = impl_->counters[i];
    snap.classes[i] = {c.bytes_out.load(), c.bytes_in.load(), c.requests.load()};
  }
  return snap;
}

std::vector<LogEntry> PortalServer::request_log() const {
  std::lock_guard lock(impl_->log_mutex);
  return impl_->log;
}

std::shared_ptr<const model::PortalDescriptor> PortalServer::descriptor(const std::string& portal_id) const {
  auto st = impl_->portal(portal_id);
  return st ? st->descriptor : nullptr;
}

std::vector<std::string> PortalServer::relay_allowlist() const { return impl_->allowlist(); }

}  // namespace clipportal::server
