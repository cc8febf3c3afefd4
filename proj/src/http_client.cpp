#include "clipportal/http_client.hpp"

#include <algorithm>
#include <cctype>
#include <memory>

#include <httplib.h>

namespace clipportal::http {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::uint64_t header_bytes(const Headers& headers) {
  std::uint64_t n = 0;
  for (const auto& [k, v] : headers) n += k.size() + v.size() + 4;
  return n;
}

std::unique_ptr<httplib::ClientImpl> connect_to(const Url& url, const ClientOptions& options) {
  std::unique_ptr<httplib::ClientImpl> cli;
  if (url.is_secure()) {
    auto ssl = std::make_unique<httplib::SSLClient>(url.host, url.effective_port());
    if (!options.ca_cert_pem.empty()) {
      ssl->load_ca_cert_store(options.ca_cert_pem.data(), options.ca_cert_pem.size());
    }
    ssl->enable_server_certificate_verification(options.verify_tls);
    cli = std::move(ssl);
  } else if (url.scheme == "http") {
    cli = std::make_unique<httplib::ClientImpl>(url.host, url.effective_port());
  } else {
    throw FetchError("unsupported scheme: " + url.scheme);
  }
  cli->set_connection_timeout(options.timeout_seconds, 0);
  cli->set_read_timeout(options.timeout_seconds, 0);
  cli->set_write_timeout(options.timeout_seconds, 0);
  cli->set_keep_alive(false);
  cli->set_follow_location(false);
  return cli;
}

}  // namespace

std::optional<std::string> Response::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return std::nullopt;
}

std::vector<std::string> Response::headers_named(std::string_view name) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) out.push_back(v);
  }
  return out;
}

std::string form_urlencode(const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out;
  for (const auto& [k, v] : fields) {
    if (!out.empty()) out += '&';
    out += percent_encode_form(k);
    out += '=';
    out += percent_encode_form(v);
  }
  return out;
}

Client::Client(ClientOptions options, CookieJar* jar) : options_(std::move(options)), jar_(jar) {}

Response Client::get(const Url& url, const Headers& extra) {
  Request r;
  r.url = url;
  r.headers = extra;
  return send(std::move(r));
}

Response Client::post_form(const Url& url, const std::vector<std::pair<std::string, std::string>>& fields,
                           const Headers& extra) {
  Request r;
  r.method = "POST";
  r.url = url;
  r.headers = extra;
  r.body = form_urlencode(fields);
  r.content_type = "application/x-www-form-urlencoded";
  return send(std::move(r));
}

Response Client::post_json(const Url& url, const std::string& json, const Headers& extra) {
  Request r;
  r.method = "POST";
  r.url = url;
  r.headers = extra;
  r.body = json;
  r.content_type = "application/json";
  return send(std::move(r));
}

Response Client::send_once(const Request& req) {
  auto cli = connect_to(req.url, options_);
  httplib::Headers headers;
  headers.emplace("User-Agent", options_.user_agent);
  for (const auto& [k, v] : req.headers) headers.emplace(k, v);
  if (jar_) {
    std::string cookie = jar_->cookie_header_for(req.url);
    if (!cookie.empty()) headers.emplace("Cookie", cookie);
  }

  httplib::Request hreq;
  hreq.method = req.method;
  hreq.path = req.url.target();
  hreq.headers = headers;
  hreq.body = req.body;
  if (!req.content_type.empty()) hreq.set_header("Content-Type", req.content_type);

  std::uint64_t out_bytes = req.method.size() + hreq.path.size() + 12 + req.body.size() + 2;
  for (const auto& [k, v] : hreq.headers) out_bytes += k.size() + v.size() + 4;
  out_bytes += req.url.host_port().size() + 8;  // Host header

  auto result = cli->send(hreq);
  {
    std::lock_guard lock(mutex_);
    auto& t = traffic_[req.url.origin()];
    t.requests += 1;
    t.bytes_out += out_bytes;
    if (result) {
      Headers hs(result->headers.begin(), result->headers.end());
      t.bytes_in += 17 + result->reason.size() + header_bytes(hs) + 2 + result->body.size();
    }
  }
  if (!result) {
    throw FetchError(req.method + " " + req.url.str() + ": " + httplib::to_string(result.error()));
  }
  Response resp;
  resp.status = result->status;
  resp.headers.assign(result->headers.begin(), result->headers.end());
  resp.body = std::move(result->body);
  resp.url = req.url;
  resp.bytes_out = out_bytes;
  resp.bytes_in = 17 + result->reason.size() + header_bytes(resp.headers) + 2 + resp.body.size();
  if (jar_) {
    for (const auto& sc : resp.headers_named("Set-Cookie")) jar_->set_from_header(req.url, sc);
  }
  return resp;
}

Response Client::send(Request req, bool follow) {
  std::uint64_t total_in = 0;
  std::uint64_t total_out = 0;
  for (int hop = 0;; ++hop) {
    Response resp = send_once(req);
    total_in += resp.bytes_in;
    total_out += resp.bytes_out;
    const bool redirect = resp.status == 301 || resp.status == 302 || resp.status == 303 || resp.status == 307 ||
                          resp.status == 308;
    auto location = resp.header("Location");
    if (!follow || !redirect || !location) {
      resp.redirects = static_cast<std::size_t>(hop);
      resp.bytes_in = total_in;
      resp.bytes_out = total_out;
      return resp;
    }
    if (hop >= options_.max_redirects) {
      throw FetchError("too many redirects fetching " + req.url.str());
    }
    auto next = resolve(req.url, *location);
    if (!next) throw FetchError("bad redirect target: " + *location);
    next->fragment.reset();
    if (resp.status != 307 && resp.status != 308) {
      req.method = "GET";
      req.body.clear();
      req.content_type.clear();
    }
    req.url = *next;
  }
}

std::map<std::string, TrafficStats> Client::traffic() const {
  std::lock_guard lock(mutex_);
  return {traffic_.begin(), traffic_.end()};
}

TrafficStats Client::traffic_for(std::string_view origin) const {
  std::lock_guard lock(mutex_);
  auto it = traffic_.find(origin);
  return it == traffic_.end() ? TrafficStats{} : it->second;
}

}  // namespace clipportal::http
