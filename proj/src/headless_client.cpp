#include "clipportal/headless_client.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace clipportal::client {

using json = nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string escape_html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void walk(const html::Node& n, const std::function<bool(const html::Node&)>& visit) {
  for (const auto& c : n.children()) {
    if (visit(*c)) walk(*c, visit);
  }
}

const html::Node* enclosing_form(const html::Node* n) {
  for (; n; n = n->parent()) {
    if (n->is_element() && n->name() == "form") return n;
  }
  return nullptr;
}

const html::Node* first_with_href(const xpath::NodeSet& nodes) {
  for (const auto* n : nodes) {
    for (const html::Node* p = n; p; p = p->parent()) {
      if (p->is_element() && p->attr("href")) return p;
    }
  }
  return nullptr;
}

void set_field(std::vector<std::pair<std::string, std::string>>& fields, const std::string& name,
               const std::string& value) {
  auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == name; });
  if (it == fields.end()) {
    fields.emplace_back(name, value);
  } else {
    it->second = value;
  }
}

bool write_if_changed(const std::filesystem::path& p, const std::string& content) {
  {
    std::ifstream in(p, std::ios::binary);
    if (in) {
      std::stringstream ss;
      ss << in.rdbuf();
      if (ss.str() == content) return false;
    }
  }
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("IoError: cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
  return true;
}

std::string bearer(const std::string& token) { return "Bearer " + token; }

}  // namespace

std::string_view to_string(StepCause c) {
  switch (c) {
    case StepCause::FetchFailed: return "FetchFailed";
    case StepCause::FormNotFound: return "FormNotFound";
    case StepCause::LinkNotFound: return "LinkNotFound";
    case StepCause::LoginRejected: return "LoginRejected";
    case StepCause::EmptyClip: return "EmptyClip";
  }
  return "?";
}

StepError::StepError(std::size_t step, StepCause cause, const std::string& detail)
    : std::runtime_error(std::string(to_string(cause)) + " at step " + std::to_string(step) +
                         (detail.empty() ? "" : ": " + detail)),
      step_(step),
      cause_(cause) {}

InitError::InitError(Kind kind, const std::string& detail) : std::runtime_error(detail), kind_(kind) {}

std::string ChangeReport::to_json() const {
  json j{{"cycle", cycle},           {"portlet_id", portlet_id}, {"changed", changed},
         {"old_digest", old_digest}, {"new_digest", new_digest}, {"fetch_bytes", fetch_bytes}};
  j["error"] = error ? json(*error) : json(nullptr);
  return j.dump();
}

std::string WatchSummary::to_json() const {
  json t = json::object();
  for (const auto& [origin, s] : traffic) {
    t[origin] = json{{"requests", s.requests}, {"bytes_out", s.bytes_out}, {"bytes_in", s.bytes_in}};
  }
  return json{{"summary", true},
              {"cycles", cycles},
              {"reports", reports},
              {"changed", changed},
              {"errors", errors},
              {"server_requests", server_requests},
              {"server_bytes", server_bytes},
              {"traffic", t}}
      .dump();
}

std::vector<std::pair<std::string, std::string>> form_controls(const html::Node& form) {
  std::vector<std::pair<std::string, std::string>> out;
  bool submitter = false;
  walk(form, [&](const html::Node& n) {
    if (!n.is_element()) return false;
    if (n.name() == "form") return false;
    auto name = n.attr("name");
    if (!name || name->empty() || n.attr("disabled")) return true;
    const std::string key(*name);
    if (n.name() == "input") {
      std::string type = lower(n.attr("type").value_or("text"));
      std::string value(n.attr("value").value_or(""));
      if (type == "checkbox" || type == "radio") {
        if (n.attr("checked")) out.emplace_back(key, n.attr("value") ? value : "on");
      } else if (type == "submit") {
        if (!submitter) out.emplace_back(key, value);
        submitter = true;
      } else if (type != "image" && type != "button" && type != "reset" && type != "file") {
        out.emplace_back(key, value);
      }
    } else if (n.name() == "textarea") {
      out.emplace_back(key, html::text_content(n));
    } else if (n.name() == "select") {
      std::vector<const html::Node*> options;
      walk(n, [&](const html::Node& o) {
        if (o.is_element() && o.name() == "option") options.push_back(&o);
        return true;
      });
      auto value_of = [](const html::Node* o) {
        auto v = o->attr("value");
        return v ? std::string(*v) : html::text_content(*o);
      };
      bool any = false;
      for (const auto* o : options) {
        if (o->attr("selected")) {
          out.emplace_back(key, value_of(o));
          any = true;
          if (!n.attr("multiple")) break;
        }
      }
      if (!any && !options.empty() && !n.attr("multiple")) out.emplace_back(key, value_of(options.front()));
      return false;
    } else if (n.name() == "button") {
      std::string type = lower(n.attr("type").value_or("submit"));
      if (type == "submit" && !submitter) {
        out.emplace_back(key, std::string(n.attr("value").value_or("")));
        submitter = true;
      }
    }
    return true;
  });
  return out;
}

std::string cookie_header_for(const CookieJar& jar, const Url& url) { return jar.cookie_header_for(url); }

ClientSession::ClientSession(const std::string& server_url, const std::string& portal_id, const std::string& user,
                             const std::string& pass, SessionOptions options) {
  auto base = Url::parse(server_url);
  if (!base) throw InitError(InitError::Kind::Transport, "bad server URL: " + server_url);
  server_origin_ = base->origin();
  server_ = std::make_unique<http::Client>(http::ClientOptions{.ca_cert_pem = options.ca_cert_pem,
                                                               .verify_tls = options.verify_tls,
                                                               .max_redirects = 0,
                                                               .timeout_seconds = options.timeout_seconds});
  http::ClientOptions source_options;
  source_options.max_redirects = 5;
  source_options.timeout_seconds = options.timeout_seconds;
  sources_ = std::make_unique<http::Client>(source_options, &jar_);

  auto api = [&](const std::string& path) { return Url::parse_or_throw(server_origin_ + path); };
  auto call = [&](const http::Request& req) {
    try {
      return server_->send(req, false);
    } catch (const http::FetchError& e) {
      throw InitError(InitError::Kind::Transport, e.what());
    }
  };
  auto fail = [](const http::Response& r, const std::string& what) -> InitError {
    std::string detail = what + ": HTTP " + std::to_string(r.status);
    try {
      detail += " " + json::parse(r.body).value("error", std::string());
    } catch (const std::exception&) {
    }
    if (r.status == 401 || r.status == 429) return InitError(InitError::Kind::AuthError, detail);
    if (r.status == 404) return InitError(InitError::Kind::NotFound, detail);
    return InitError(InitError::Kind::Transport, detail);
  };

  http::Request login;
  login.method = "POST";
  login.url = api("/api/login");
  login.body = json{{"user", user}, {"pass", pass}}.dump();
  login.content_type = "application/json";
  auto r = call(login);
  if (r.status != 200) throw fail(r, "login");
  std::string token;
  try {
    token = json::parse(r.body).at("token").get<std::string>();
  } catch (const std::exception&) {
    throw InitError(InitError::Kind::Transport, "login: malformed reply");
  }
  const http::Headers auth{{"Authorization", bearer(token)}};

  http::Request get_descriptor;
  get_descriptor.url = api("/api/portal/" + percent_encode_form(portal_id) + "/descriptor");
  get_descriptor.headers = auth;
  r = call(get_descriptor);
  if (r.status != 200) throw fail(r, "descriptor");
  try {
    descriptor_ = model::load_descriptor(r.body);
  } catch (const model::DescriptorError& e) {
    throw InitError(InitError::Kind::DescriptorError, e.what());
  }

  for (const auto& [id, def] : descriptor_.portlets) {
    states_[id];
    if (!def.credential_ref) continue;
    http::Request get_cred;
    get_cred.url = api("/api/portal/" + percent_encode_form(portal_id) + "/credentials/" + percent_encode_form(id));
    get_cred.headers = auth;
    r = call(get_cred);
    if (r.status != 200) throw fail(r, "credentials for " + id);
    try {
      credentials_.emplace(id, model::credential_from_json(r.body));
    } catch (const std::exception& e) {
      throw InitError(InitError::Kind::Transport, "credentials for " + id + ": " + e.what());
    }
  }
}

ClientSession::~ClientSession() = default;

const model::PortletDefinition& ClientSession::portlet(const std::string& portlet_id) const {
  auto it = descriptor_.portlets.find(portlet_id);
  if (it == descriptor_.portlets.end()) throw std::out_of_range("unknown portlet " + portlet_id);
  return it->second;
}

clip::PortletFragment ClientSession::clip_page(const model::PortletDefinition& def, const http::Response& page,
                                               std::size_t step) {
  auto doc = html::parse_html(page.body, page.url);
  try {
    return clip::apply_clip(doc, def.clip_rules, def.sanitize_policy);
  } catch (const clip::EmptyClip&) {
    throw StepError(step, StepCause::EmptyClip, "no select rule matched " + page.url.str());
  }
}

clip::PortletFragment ClientSession::execute(const model::PortletDefinition& def, std::size_t first_step,
                                             std::optional<Url> start, std::uint64_t* bytes) {
  const auto steps = def.effective_workflow();
  const Url source = Url::parse_or_throw(def.source_url);
  std::optional<http::Response> page;

  auto fetch = [&](std::size_t i, http::Request req) {
    try {
      auto r = sources_->send(std::move(req));
      if (bytes) *bytes += r.bytes_in + r.bytes_out;
      if (r.status >= 400) {
        throw StepError(i, StepCause::FetchFailed, "HTTP " + std::to_string(r.status) + " from " + r.url.str());
      }
      page = std::move(r);
    } catch (const http::FetchError& e) {
      throw StepError(i, StepCause::FetchFailed, e.what());
    }
  };
  auto get = [&](std::size_t i, const Url& url) {
    http::Request req;
    req.url = url;
    fetch(i, std::move(req));
  };

  if (start) get(first_step, *start);

  for (std::size_t i = first_step; i < steps.size(); ++i) {
    const auto& step = steps[i];
    switch (step.kind) {
      case model::WorkflowStep::Kind::get: {
        auto url = resolve(source, step.url);
        if (!url) throw StepError(i, StepCause::FetchFailed, "bad URL " + step.url);
        get(i, *url);
        break;
      }
      case model::WorkflowStep::Kind::submit_form: {
        if (!page) throw StepError(i, StepCause::FormNotFound, "no page loaded");
        auto doc = html::parse_html(page->body, page->url);
        const html::Node* form = nullptr;
        for (const auto* n : xpath::evaluate(step.path, doc.root())) {
          if ((form = enclosing_form(n))) break;
        }
        if (!form) throw StepError(i, StepCause::FormNotFound, step.path_source + " on " + page->url.str());

        auto fields = form_controls(*form);
        const model::CredentialEntry* cred = nullptr;
        if (auto it = credentials_.find(def.portlet_id); it != credentials_.end()) cred = &it->second;
        for (const auto& [name, value] : step.fields) {
          if (value == model::kUserPlaceholder || value == model::kPassPlaceholder) {
            if (!cred) throw StepError(i, StepCause::LoginRejected, "no credentials for " + def.portlet_id);
            set_field(fields, name, value == model::kUserPlaceholder ? cred->username : cred->password);
          } else {
            set_field(fields, name, value);
          }
        }
        if (cred) {
          for (const auto& [name, value] : cred->extra_fields) set_field(fields, name, value);
        }

        auto action = resolve(page->url, form->attr("action").value_or(""));
        if (!action) throw StepError(i, StepCause::FormNotFound, "bad form action");
        action->fragment.reset();
        http::Request req;
        if (lower(form->attr("method").value_or("get")) == "post") {
          req.method = "POST";
          req.url = *action;
          req.body = http::form_urlencode(fields);
          req.content_type = "application/x-www-form-urlencoded";
        } else {
          action->query = http::form_urlencode(fields);
          req.url = *action;
        }
        fetch(i, std::move(req));

        if (step.uses_placeholders()) {
          auto after = html::parse_html(page->body, page->url);
          for (const auto* n : xpath::evaluate(step.path, after.root())) {
            if (enclosing_form(n)) throw StepError(i, StepCause::LoginRejected, "login form returned after submit");
          }
        }
        break;
      }
      case model::WorkflowStep::Kind::follow_link: {
        if (!page) throw StepError(i, StepCause::LinkNotFound, "no page loaded");
        auto doc = html::parse_html(page->body, page->url);
        const html::Node* link = first_with_href(xpath::evaluate(step.path, doc.root()));
        if (!link) throw StepError(i, StepCause::LinkNotFound, step.path_source + " on " + page->url.str());
        auto url = resolve(doc.base_url(), *link->attr("href"));
        if (!url) throw StepError(i, StepCause::LinkNotFound, "bad href");
        url->fragment.reset();
        get(i, *url);
        break;
      }
      case model::WorkflowStep::Kind::clip: {
        if (!page) throw StepError(i, StepCause::FetchFailed, "no page loaded");
        auto fragment = clip_page(def, *page, i);
        std::lock_guard lock(state_mutex_);
        states_[def.portlet_id].clip_url = page->url;
        return fragment;
      }
    }
  }
  throw StepError(steps.size(), StepCause::EmptyClip, "workflow has no clip step");
}

void ClientSession::fetch_embedded(const std::string& portlet_id, const clip::PortletFragment& fragment) {
  std::vector<EmbeddedFetch> fetched;
  auto root = html::parse_fragment(fragment.html);
  std::vector<std::string> urls;
  walk(*root, [&](const html::Node& n) {
    if (n.is_element()) {
      if (n.name() == "object" && n.attr("data")) urls.emplace_back(*n.attr("data"));
      if (n.name() == "embed" && n.attr("src")) urls.emplace_back(*n.attr("src"));
    }
    return true;
  });
  std::sort(urls.begin(), urls.end());
  urls.erase(std::unique(urls.begin(), urls.end()), urls.end());
  for (const auto& u : urls) {
    EmbeddedFetch f{u, 0, 0};
    if (auto url = Url::parse(u)) {
      try {
        auto r = sources_->get(*url);
        f.status = r.status;
        f.bytes = r.body.size();
      } catch (const http::FetchError&) {
      }
    }
    fetched.push_back(std::move(f));
  }
  std::lock_guard lock(state_mutex_);
  states_[portlet_id].embedded = std::move(fetched);
}

clip::PortletFragment ClientSession::run_workflow(const std::string& portlet_id) {
  const auto& def = portlet(portlet_id);
  try {
    auto fragment = execute(def, 0, std::nullopt, nullptr);
    if (def.sanitize_policy == clip::SanitizePolicy::trusted) fetch_embedded(portlet_id, fragment);
    std::lock_guard lock(state_mutex_);
    auto& st = states_[portlet_id];
    st.fragment = fragment;
    st.error.reset();
    return fragment;
  } catch (const StepError& e) {
    std::lock_guard lock(state_mutex_);
    states_[portlet_id].error = e.what();
    throw;
  }
}

ChangeReport ClientSession::refresh(const std::string& portlet_id, std::size_t cycle) {
  const auto& def = portlet(portlet_id);
  const auto steps = def.effective_workflow();
  ChangeReport report;
  report.cycle = cycle;
  report.portlet_id = portlet_id;
  std::optional<Url> last;
  {
    std::lock_guard lock(state_mutex_);
    auto& st = states_[portlet_id];
    if (st.fragment) report.old_digest = st.fragment->digest;
    last = st.clip_url;
  }
  const bool has_login = std::any_of(steps.begin(), steps.end(), [](const auto& s) {
    return s.kind == model::WorkflowStep::Kind::submit_form;
  });

  try {
    std::optional<clip::PortletFragment> fragment;
    if (has_login && last) {
      const std::size_t clip_step = steps.size() - 1;
      try {
        fragment = execute(def, clip_step, last, &report.fetch_bytes);
      } catch (const StepError& e) {
        if (e.cause() != StepCause::EmptyClip) throw;
      }
    }
    if (!fragment) fragment = execute(def, 0, std::nullopt, &report.fetch_bytes);
    if (def.sanitize_policy == clip::SanitizePolicy::trusted) fetch_embedded(portlet_id, *fragment);
    report.new_digest = fragment->digest;
    report.changed = report.new_digest != report.old_digest;
    std::lock_guard lock(state_mutex_);
    auto& st = states_[portlet_id];
    st.fragment = std::move(fragment);
    st.error.reset();
  } catch (const StepError& e) {
    report.error = e.what();
    report.new_digest = report.old_digest;
    report.changed = false;
    std::lock_guard lock(state_mutex_);
    states_[portlet_id].error = e.what();
  }
  return report;
}

std::vector<ChangeReport> ClientSession::refresh_many(const std::vector<std::string>& portlet_ids,
                                                      std::size_t cycle) {
  std::mutex mutex;
  std::vector<ChangeReport> reports;
  std::vector<std::future<void>> tasks;
  for (const auto& id : portlet_ids) {
    tasks.push_back(std::async(std::launch::async, [&, id] {
      auto r = refresh(id, cycle);
      std::lock_guard lock(mutex);
      reports.push_back(std::move(r));
    }));
  }
  for (auto& t : tasks) t.get();
  return reports;
}

std::vector<ChangeReport> ClientSession::run_all() {
  std::vector<std::string> ids;
  for (const auto& row : descriptor_.layout) ids.insert(ids.end(), row.begin(), row.end());
  return refresh_many(ids, 0);
}

std::string ClientSession::render_portal_html() const {
  std::lock_guard lock(state_mutex_);
  std::string out = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" +
                    escape_html(descriptor_.title) + "</title>\n" +
                    "<style>.portal-row{display:flex;gap:1em}.portlet{flex:1;border:1px solid #999}"
                    ".portlet-title{margin:0;padding:.2em;background:#ddd}"
                    ".portlet-error{color:#a00}</style>\n</head>\n<body>\n<h1>" +
                    escape_html(descriptor_.title) + "</h1>\n";
  for (const auto& row : descriptor_.layout) {
    out += "<div class=\"portal-row\">\n";
    for (const auto& id : row) {
      const auto& def = descriptor_.portlets.at(id);
      auto it = states_.find(id);
      const PortletState* st = it == states_.end() ? nullptr : &it->second;
      out += "<section class=\"portlet\" id=\"portlet-" + escape_html(id) + "\" data-window-state=\"" +
             std::string(model::to_string(def.window_state)) + "\" data-mode=\"" +
             std::string(model::to_string(def.mode)) + "\"";
      if (st && st->fragment) out += " data-digest=\"" + st->fragment->digest + "\"";
      out += ">\n<h2 class=\"portlet-title\">" + escape_html(def.title.empty() ? id : def.title) + "</h2>\n";
      if (def.window_state != model::WindowState::minimized) {
        if (st && st->fragment) {
          out += "<div class=\"portlet-body\">\n" + st->fragment->html + "\n</div>\n";
        } else {
          out += "<div class=\"portlet-error\">" +
                 escape_html(st && st->error ? *st->error : std::string("not loaded")) + "</div>\n";
        }
      }
      out += "</section>\n";
    }
    out += "</div>\n";
  }
  out += "</body></html>\n";
  return out;
}

RenderResult ClientSession::render_portal(const std::filesystem::path& output_dir) const {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw std::runtime_error("IoError: " + output_dir.string() + ": " + ec.message());
  RenderResult result;
  auto emit = [&](const std::filesystem::path& p, const std::string& content) {
    (write_if_changed(p, content) ? result.written : result.unchanged).push_back(p);
  };
  emit(output_dir / "portal.html", render_portal_html());
  std::lock_guard lock(state_mutex_);
  for (const auto& [id, def] : descriptor_.portlets) {
    auto it = states_.find(id);
    if (it == states_.end() || !it->second.fragment) {
      ++result.failed_portlets;
      continue;
    }
    if (it->second.error) ++result.failed_portlets;
    emit(output_dir / ("portlet-" + id + ".html"), it->second.fragment->html + "\n");
  }
  return result;
}

WatchSummary ClientSession::watch(std::size_t cycles, std::chrono::milliseconds interval,
                                  const std::function<void(const ChangeReport&)>& on_report) {
  std::vector<std::string> ids;
  for (const auto& row : descriptor_.layout) {
    for (const auto& id : row) {
      if (descriptor_.portlets.at(id).refresh.policy == model::RefreshPolicy::interval) ids.push_back(id);
    }
  }
  const auto before = server_traffic();
  WatchSummary summary;
  for (std::size_t c = 1; c <= cycles; ++c) {
    if (c > 1) std::this_thread::sleep_for(interval);
    for (const auto& r : refresh_many(ids, c)) {
      ++summary.reports;
      if (r.changed) ++summary.changed;
      if (r.error) ++summary.errors;
      if (on_report) on_report(r);
    }
    ++summary.cycles;
  }
  const auto after = server_traffic();
  summary.server_requests = after.requests - before.requests;
  summary.server_bytes = (after.bytes_in + after.bytes_out) - (before.bytes_in + before.bytes_out);
  summary.traffic = source_traffic();
  return summary;
}

PortletState ClientSession::state(const std::string& portlet_id) const {
  std::lock_guard lock(state_mutex_);
  auto it = states_.find(portlet_id);
  return it == states_.end() ? PortletState{} : it->second;
}

std::optional<std::string> ClientSession::digest(const std::string& portlet_id) const {
  auto st = state(portlet_id);
  if (!st.fragment) return std::nullopt;
  return st.fragment->digest;
}

http::TrafficStats ClientSession::server_traffic() const { return server_->traffic_for(server_origin_); }

std::map<std::string, http::TrafficStats> ClientSession::source_traffic() const { return sources_->traffic(); }

}  // namespace clipportal::client
