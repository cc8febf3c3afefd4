#include "clipportal/testbed.hpp"

#include <ctime>
#include <fstream>
#include <set>

#include <httplib.h>

#include "clipportal/crypto.hpp"
#include "clipportal/portal_model.hpp"
#include "clipportal/portal_server.hpp"

namespace clipportal::testbed {

namespace {

constexpr std::string_view kCsrf = "tb-csrf-7f3a";

std::string stamp(std::uint64_t revision) {
  std::time_t t = 1146733200 + static_cast<std::time_t>(revision) * 60;  // 2006-05-04 09:00 UTC
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M", &tm);
  return buf;
}

std::string padding(std::size_t current, std::size_t target) {
  static const char* words[] = {"archive", "faculty", "senate", "library", "notice", "semester",
                                "course",  "campus",  "record", "minutes", "bulletin", "office"};
  std::string out = "<div id=\"archive\">\n";
  std::size_t n = 0;
  while (current + out.size() + 32 < target) {
    out += "<p>Item " + std::to_string(n) + ":";
    for (int w = 0; w < 12; ++w) {
      out += ' ';
      out += words[(n * 7 + static_cast<std::size_t>(w) * 5) % 12];
    }
    out += ".</p>\n";
    ++n;
  }
  out += "</div>\n";
  return out;
}

std::string news_page(std::uint64_t revision, std::size_t bytes, bool second) {
  std::string head = R"(<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>Campus News</title>
<link rel="stylesheet" href="/static/news.css"></head>
<body>
<div id="masthead"><a href="/news">Campus News</a> | <a href="/news/page2">Page 2</a></div>
<div id="headlines">
<h2>Headlines</h2>
<p class="stamp">Updated )" + stamp(revision) + "</p>\n";
  if (!second) {
    head += R"(<ul>
<li><a href="story/1">Library hours extended</a></li>
<li><a href="/news/story/2">Exam schedule posted</a></li>
<li><a href="page2">More headlines</a></li>
</ul>
<img src="img/logo.png" alt="Campus News">
<div class="ad">Advertisement <script>track("news")</script></div>
<form action="search"><input name="q"><input type="submit" value="Search"></form>
)";
  } else {
    head += R"(<ul>
<li><a href="story/3">Parking permits renewed</a></li>
<li><a href="news">Back to headlines</a></li>
</ul>
)";
  }
  head += "</div>\n";
  std::string tail = "</body></html>\n";
  return head + padding(head.size() + tail.size(), bytes) + tail;
}

std::string login_page(bool failed) {
  std::string page = R"(<!DOCTYPE html>
<html><head><title>Grades login</title></head>
<body>
<div id="login-box">
<h1>Student records</h1>
)";
  if (failed) page += "<p class=\"error\">Invalid user name or password.</p>\n";
  page += R"(<form id="login" method="post" action="/login">
<input type="hidden" name="csrf" value=")" + std::string(kCsrf) + R"(">
<label>User <input name="u"></label>
<label>Password <input type="password" name="p"></label>
<label><input type="checkbox" name="remember" value="1"> Remember me</label>
<input type="submit" name="go" value="Log in">
</form>
</div>
</body></html>
)";
  return page;
}

std::string grades_page(std::uint64_t revision, std::size_t bytes) {
  std::string head = R"(<!DOCTYPE html>
<html><head><title>Grades</title></head>
<body>
<div id="nav"><a href="/grades">Grades</a> | <a href="/applet">Lab</a> | <a href="/logout">Log out</a></div>
<div id="grades">
<h2>Grades, spring term</h2>
<p class="stamp">As of )" + stamp(revision) + R"HTML(</p>
<table>
<tr><th>Course</th><th>Grade</th></tr>
<tr><td bgcolor="#eeeeee"><a href="course/cs101">CS 101</a></td><td>A</td></tr>
<tr><td bgcolor="#eeeeee"><a href="course/ma201">MA 201</a></td><td>B+</td></tr>
<tr><td bgcolor="#eeeeee"><a href="course/ph110">PH 110</a></td><td>A-</td></tr>
</table>
<a href="transcript.pdf" onclick="track()">Transcript</a>
</div>
)HTML";
  std::string tail = "</body></html>\n";
  return head + padding(head.size() + tail.size(), bytes) + tail;
}

std::string applet_page() {
  return R"(<!DOCTYPE html>
<html><head><title>Lab</title></head>
<body>
<div id="applet">
<h2>Virtual lab</h2>
<object data="applet/lab.bin" type="application/x-lab" width="480" height="320">
<param name="level" value="1">
<embed src="applet/lab.bin" type="application/x-lab">
</object>
<p><a href="applet/help.html">Help</a></p>
</div>
</body></html>
)";
}

std::string cookie_value(const std::string& header, std::string_view name) {
  std::size_t pos = 0;
  while (pos < header.size()) {
    auto end = header.find(';', pos);
    if (end == std::string::npos) end = header.size();
    std::string_view part(header.data() + pos, end - pos);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    if (part.starts_with(name) && part.size() > name.size() && part[name.size()] == '=') {
      return std::string(part.substr(name.size() + 1));
    }
    pos = end + 1;
  }
  return {};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

struct Testbed::Impl {
  httplib::Server news;
  httplib::Server grades;
  std::thread news_thread;
  std::thread grades_thread;

  std::atomic<std::uint64_t> news_revision{0};
  std::atomic<std::uint64_t> grades_revision{0};
  std::atomic<bool> news_down{false};
  std::atomic<bool> grades_down{false};

  mutable std::mutex mutex;
  std::set<std::string> sids;
  std::vector<std::string> sid_order;
  std::vector<Hit> hits;

  bool valid_sid(const httplib::Request& req) const {
    auto sid = cookie_value(req.get_header_value("Cookie"), "SID");
    std::lock_guard lock(mutex);
    return !sid.empty() && sids.contains(sid);
  }
};

Testbed::Testbed(Options options)
    : options_(std::move(options)), impl_(std::make_unique<Impl>()), page_bytes_(options_.page_bytes) {
  auto& I = *impl_;

  auto common = [this](httplib::Server& s, const std::string& site, std::atomic<bool>& down) {
    s.set_pre_routing_handler([this, &down](const httplib::Request& req, httplib::Response& res) {
      if (options_.cors && req.method == "OPTIONS") {
        res.status = 204;
        return httplib::Server::HandlerResponse::Unhandled;
      }
      if (down && !req.path.starts_with("/_testbed/")) {
        res.status = 503;
        res.set_content("unavailable\n", "text/plain");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
    if (options_.cors) {
      s.set_post_routing_handler([](const httplib::Request& req, httplib::Response& res) {
        auto origin = req.get_header_value("Origin");
        if (origin.empty()) return;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Credentials", "true");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Access-Control-Expose-Headers", "Location");
        res.set_header("Vary", "Origin");
      });
      s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
    s.Post("/_testbed/mutate", [this](const httplib::Request& req, httplib::Response& res) {
      std::string which = req.has_param("site") ? req.get_param_value("site") : "news";
      if (which != "news" && which != "grades") {
        res.status = 400;
        return;
      }
      mutate(which);
      res.set_content(std::to_string(revision(which)) + "\n", "text/plain");
    });
    s.Post("/_testbed/size", [this](const httplib::Request& req, httplib::Response& res) {
      page_bytes_ = std::stoul(req.get_param_value("bytes"));
      res.set_content(std::to_string(page_bytes_.load()) + "\n", "text/plain");
    });
    s.Post("/_testbed/down", [this, site](const httplib::Request& req, httplib::Response& res) {
      set_down(site, req.get_param_value("on") == "1");
      res.set_content("ok\n", "text/plain");
    });
    s.set_logger([this, site](const httplib::Request& req, const httplib::Response& res) {
      if (req.path.starts_with("/_testbed/")) return;
      std::lock_guard lock(impl_->mutex);
      impl_->hits.push_back(Hit{site, req.method, req.path, req.get_header_value("Cookie"), res.status});
    });
  };
  common(I.news, "news", I.news_down);
  common(I.grades, "grades", I.grades_down);

  auto html = [](httplib::Response& res, std::string body) {
    res.set_content(std::move(body), "text/html; charset=utf-8");
  };

  I.news.Get("/news", [this, html](const httplib::Request&, httplib::Response& res) {
    html(res, news_page(impl_->news_revision, page_bytes_, false));
  });
  I.news.Get("/news/page2", [this, html](const httplib::Request&, httplib::Response& res) {
    html(res, news_page(impl_->news_revision, page_bytes_, true));
  });
  I.news.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/news"); });

  I.grades.Get("/login", [html](const httplib::Request&, httplib::Response& res) { html(res, login_page(false)); });
  I.grades.Post("/login", [this, html](const httplib::Request& req, httplib::Response& res) {
    bool ok = req.get_param_value("u") == options_.user && req.get_param_value("p") == options_.pass &&
              req.get_param_value("csrf") == kCsrf;
    if (!ok) return html(res, login_page(true));
    std::string sid = crypto::random_token();
    {
      std::lock_guard lock(impl_->mutex);
      impl_->sids.insert(sid);
      impl_->sid_order.push_back(sid);
    }
    res.set_header("Set-Cookie", "SID=" + sid + "; Path=/; HttpOnly");
    res.set_redirect("/grades", 302);
  });
  I.grades.Get("/logout", [this](const httplib::Request& req, httplib::Response& res) {
    auto sid = cookie_value(req.get_header_value("Cookie"), "SID");
    {
      std::lock_guard lock(impl_->mutex);
      impl_->sids.erase(sid);
    }
    res.set_header("Set-Cookie", "SID=; Path=/; Max-Age=0");
    res.set_redirect("/login", 302);
  });
  I.grades.Get("/grades", [this, html](const httplib::Request& req, httplib::Response& res) {
    if (!impl_->valid_sid(req)) return res.set_redirect("/login", 302);
    html(res, grades_page(impl_->grades_revision, page_bytes_));
  });
  I.grades.Get("/applet", [this, html](const httplib::Request& req, httplib::Response& res) {
    if (!impl_->valid_sid(req)) return res.set_redirect("/login", 302);
    html(res, applet_page());
  });
  I.grades.Get("/applet/lab.bin", [this](const httplib::Request& req, httplib::Response& res) {
    if (!impl_->valid_sid(req)) {
      res.status = 403;
      res.set_content("session required\n", "text/plain");
      return;
    }
    std::string payload = "LAB1";
    for (int i = 0; i < 252; ++i) payload.push_back(static_cast<char>(i));
    res.set_content(payload, "application/x-lab");
  });
}

Testbed::~Testbed() { stop(); }

void Testbed::start() {
  auto& I = *impl_;
  if (options_.port != 0) {
    if (!I.news.bind_to_port(options_.host, options_.port) ||
        !I.grades.bind_to_port(options_.host, options_.port + 1)) {
      throw std::runtime_error("testbed: cannot bind ports " + std::to_string(options_.port) + "-" +
                               std::to_string(options_.port + 1));
    }
    news_port_ = options_.port;
    grades_port_ = static_cast<std::uint16_t>(options_.port + 1);
  } else {
    int a = I.news.bind_to_any_port(options_.host);
    int b = I.grades.bind_to_any_port(options_.host);
    if (a <= 0 || b <= 0) throw std::runtime_error("testbed: cannot bind " + options_.host);
    news_port_ = static_cast<std::uint16_t>(a);
    grades_port_ = static_cast<std::uint16_t>(b);
  }
  I.news_thread = std::thread([&I] { I.news.listen_after_bind(); });
  I.grades_thread = std::thread([&I] { I.grades.listen_after_bind(); });
  I.news.wait_until_ready();
  I.grades.wait_until_ready();
}

void Testbed::stop() {
  if (!impl_) return;
  impl_->news.stop();
  impl_->grades.stop();
  if (impl_->news_thread.joinable()) impl_->news_thread.join();
  if (impl_->grades_thread.joinable()) impl_->grades_thread.join();
}

std::string Testbed::news_origin() const { return "http://" + options_.host + ":" + std::to_string(news_port_); }
std::string Testbed::grades_origin() const {
  return "http://" + options_.host + ":" + std::to_string(grades_port_);
}

void Testbed::mutate(const std::string& site) {
  if (site == "grades") {
    ++impl_->grades_revision;
  } else {
    ++impl_->news_revision;
  }
}

void Testbed::set_down(const std::string& site, bool down) {
  (site == "grades" ? impl_->grades_down : impl_->news_down) = down;
}

std::uint64_t Testbed::revision(const std::string& site) const {
  return site == "grades" ? impl_->grades_revision.load() : impl_->news_revision.load();
}

void Testbed::expire_sessions() {
  std::lock_guard lock(impl_->mutex);
  impl_->sids.clear();
}

std::vector<Hit> Testbed::hits() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->hits;
}

void Testbed::clear_hits() {
  std::lock_guard lock(impl_->mutex);
  impl_->hits.clear();
}

std::vector<std::string> Testbed::issued_sids() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->sid_order;
}

std::string portal_descriptor(const std::string& portal_id, const std::string& news_origin,
                              const std::string& grades_origin) {
  const std::string n = news_origin;
  const std::string g = grades_origin;
  std::string login = R"(
        {"step": "get", "url": ")" + g + R"(/login"},
        {"step": "submit_form", "form_path": "//form[@id='login']", "fields": {"u": "{user}", "p": "{pass}"}},)";
  std::string text = R"({
  "portal_id": ")" + portal_id + R"(",
  "title": "Campus portal",
  "version": 1,
  "layout": [["news", "grades"], ["applet"]],
  "portlets": {
    "news": {
      "title": "Campus news",
      "source_url": ")" + n + R"(/news",
      "clip_rules": [
        {"kind": "select", "path": "//div[@id='headlines']"},
        {"kind": "cut", "path": "//div[@class='ad']"},
        {"kind": "change", "path": "//a", "set_attr": {"name": "target", "value": "_blank"}}
      ],
      "refresh": {"policy": "interval", "interval_seconds": 1}
    },
    "grades": {
      "title": "My grades",
      "source_url": ")" + g + R"(/grades",
      "clip_rules": [
        {"kind": "select", "path": "//div[@id='grades']"},
        {"kind": "change", "path": "//td", "remove_attr": "bgcolor"}
      ],
      "workflow": [)" + login + R"(
        {"step": "clip"}
      ],
      "credential_ref": "grades",
      "refresh": {"policy": "interval", "interval_seconds": 1}
    },
    "applet": {
      "title": "Virtual lab",
      "source_url": ")" + g + R"(/applet",
      "clip_rules": [{"kind": "select", "path": "//div[@id='applet']"}],
      "workflow": [)" + login + R"(
        {"step": "get", "url": ")" + g + R"(/applet"},
        {"step": "clip"}
      ],
      "credential_ref": "grades",
      "refresh": {"policy": "interval", "interval_seconds": 1},
      "sanitize_policy": "trusted"
    }
  }
}
)";
  model::load_descriptor(text);
  return text;
}

DemoFiles write_demo_config(const std::filesystem::path& dir, const std::string& portal_id,
                            const std::string& news_origin, const std::string& grades_origin,
                            const Options& site_options, bool tls) {
  std::filesystem::create_directories(dir);
  DemoFiles f;
  f.descriptor = dir / (portal_id + ".json");
  f.vault = dir / "vault.bin";
  f.server_toml = dir / "server.toml";
  f.vault_passphrase = "testbed-vault-passphrase";
  f.portal_user = "alice";
  f.portal_pass = "alice-portal-pw";
  f.admin_user = "admin";
  f.admin_pass = "admin-portal-pw";

  write_text(f.descriptor, portal_descriptor(portal_id, news_origin, grades_origin));
  std::filesystem::remove(f.vault);
  {
    model::Vault vault(f.vault, f.vault_passphrase);
    vault.put(model::CredentialEntry{"grades", site_options.user, site_options.pass, {}});
  }
  std::string toml = "[listen]\nhost = \"127.0.0.1\"\nport = 0\n";
  toml += tls ? "tls = true\n\n[tls]\ncert = \"cert.pem\"\nkey = \"key.pem\"\n"
              : "tls = false\ninsecure_loopback = true\n";
  toml += "\n[portals]\n" + portal_id + " = \"" + f.descriptor.filename().string() + "\"\n";
  toml += "\n[vault]\npath = \"vault.bin\"\npassphrase_env = \"CLIPPORTAL_VAULT_KEY\"\n";
  toml += "\n[relay]\nenabled = false\nallowlist = \"portlet-origins\"\n";
  toml += "\n[log]\nrequests = \"requests.jsonl\"\n";
  toml += "\n[[users]]\nname = \"" + f.portal_user + "\"\npassword_hash = \"" +
          server::hash_password(f.portal_pass, 1000) + "\"\n";
  toml += "\n[[users]]\nname = \"" + f.admin_user + "\"\npassword_hash = \"" +
          server::hash_password(f.admin_pass, 1000) + "\"\nadmin = true\n";
  write_text(f.server_toml, toml);
  return f;
}

}  // namespace clipportal::testbed
