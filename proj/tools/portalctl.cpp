#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "clipportal/clip.hpp"
#include "clipportal/headless_client.hpp"
#include "clipportal/html_tree.hpp"
#include "clipportal/http_client.hpp"
#include "clipportal/portal_server.hpp"
#include "clipportal/testbed.hpp"
#include "clipportal/xpath.hpp"

using namespace clipportal;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitSyntax = 2;
constexpr int kExitEmptyClip = 3;
constexpr int kExitPartial = 4;
constexpr int kExitInit = 5;

std::atomic<bool> g_stop{false};

void wait_for_signal() {
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

std::string read_all(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Source {
  std::string file;
  std::string url;
  std::string base;
};

void add_source_options(CLI::App* cmd, Source& s) {
  cmd->add_option("--file", s.file, "Read HTML from a file ('-' for stdin)");
  cmd->add_option("--url", s.url, "Fetch HTML from a URL");
  cmd->add_option("--base", s.base, "Base URL for --file input")->default_val("http://localhost/");
}

html::Document load_source(const Source& s) {
  if (!s.url.empty()) {
    http::Client c;
    auto r = c.get(Url::parse_or_throw(s.url));
    if (r.status >= 400) throw std::runtime_error("HTTP " + std::to_string(r.status) + " from " + s.url);
    return html::parse_html(r.body, r.url);
  }
  if (s.file.empty()) throw CLI::ValidationError("one of --file or --url is required");
  return html::parse_html(read_all(s.file), s.base);
}

client::SessionOptions session_options(const std::string& ca_cert, bool insecure) {
  client::SessionOptions o;
  if (!ca_cert.empty()) o.ca_cert_pem = read_all(ca_cert);
  o.verify_tls = !insecure;
  return o;
}

void print_syntax_error(const std::string& expr, const xpath::SyntaxError& e) {
  std::cerr << e.what() << "\n  " << expr << "\n  "
            << std::string(e.offset(), ' ') << "^\n";
}

std::unique_ptr<client::ClientSession> init_session(const std::string& server, const std::string& portal,
                                                    const std::string& user, const std::string& pass,
                                                    const std::string& ca_cert, bool insecure) {
  try {
    return std::make_unique<client::ClientSession>(server, portal, user, pass, session_options(ca_cert, insecure));
  } catch (const client::InitError& e) {
    std::cerr << "init failed: " << e.what() << "\n";
    return nullptr;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Client-side web clipping portal"};
  app.require_subcommand(1);

  // xpath
  std::string xpath_expr;
  Source xpath_src;
  auto* xpath_cmd = app.add_subcommand("xpath", "Compile an XPath expression; evaluate it when a page is given");
  xpath_cmd->add_option("expr", xpath_expr, "Expression")->required();
  add_source_options(xpath_cmd, xpath_src);

  // tree
  Source tree_src;
  auto* tree_cmd = app.add_subcommand("tree", "Parse HTML and print the tree");
  add_source_options(tree_cmd, tree_src);

  // clip
  Source clip_src;
  std::vector<std::string> clip_select, clip_cut;
  std::string clip_policy = "strict";
  auto* clip_cmd = app.add_subcommand("clip", "Clip a page; fragment on stdout, digest on stderr");
  add_source_options(clip_cmd, clip_src);
  clip_cmd->add_option("--select", clip_select, "Select rule (repeatable)")->required();
  clip_cmd->add_option("--cut", clip_cut, "Cut rule (repeatable)");
  clip_cmd->add_option("--policy", clip_policy, "Sanitize policy")->check(CLI::IsMember({"strict", "trusted"}));

  // serve
  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the portal server");
  serve_cmd->add_option("--config", serve_config, "server.toml")->required()->check(CLI::ExistingFile);

  // testbed
  int tb_port = 0;
  bool tb_cors = false;
  std::size_t tb_bytes = 1024;
  std::string tb_emit;
  bool tb_emit_tls = false;
  auto* tb_cmd = app.add_subcommand("testbed", "Run the simulated legacy sites");
  tb_cmd->add_option("--port", tb_port, "News site port; grades site uses port+1 (0: any free port)");
  tb_cmd->add_flag("--cors", tb_cors, "Send permissive cross-origin headers");
  tb_cmd->add_option("--page-bytes", tb_bytes, "Approximate page size");
  tb_cmd->add_option("--emit-config", tb_emit, "Write server.toml, descriptor and vault for these sites");
  tb_cmd->add_flag("--tls", tb_emit_tls, "Emitted config serves TLS");

  // add-portlet
  struct {
    std::string server, portal, portlet_id, title, url, login_url, form = "//form", policy = "strict";
    std::string admin_user, admin_pass, user, pass, ca_cert;
    std::vector<std::string> select, cut, login_fields;
    int interval = 60;
    bool insecure = false, replace = false;
  } ap;
  auto* ap_cmd = app.add_subcommand("add-portlet", "Define a portlet on a running server");
  ap_cmd->add_option("--server", ap.server, "Portal server URL")->required();
  ap_cmd->add_option("--portal", ap.portal, "Portal id")->required();
  ap_cmd->add_option("--portlet-id", ap.portlet_id, "Portlet id")->required();
  ap_cmd->add_option("--title", ap.title, "Title");
  ap_cmd->add_option("--url", ap.url, "Source URL")->required();
  ap_cmd->add_option("--select", ap.select, "Select rule (repeatable)")->required();
  ap_cmd->add_option("--cut", ap.cut, "Cut rule (repeatable)");
  ap_cmd->add_option("--policy", ap.policy, "Sanitize policy")->check(CLI::IsMember({"strict", "trusted"}));
  ap_cmd->add_option("--interval", ap.interval, "Refresh interval in seconds (0: manual)");
  ap_cmd->add_option("--login-url", ap.login_url, "Page holding the login form (default: --url)");
  ap_cmd->add_option("--form", ap.form, "XPath of the login form");
  ap_cmd->add_option("--login-field", ap.login_fields, "user=<field> or pass=<field> (repeatable)");
  ap_cmd->add_option("--user", ap.user, "Login name stored in the vault");
  ap_cmd->add_option("--pass", ap.pass, "Password stored in the vault");
  ap_cmd->add_option("--admin-user", ap.admin_user, "Portal admin")->required();
  ap_cmd->add_option("--admin-pass", ap.admin_pass, "Portal admin password")->required();
  ap_cmd->add_option("--ca-cert", ap.ca_cert, "Trust this PEM for the server");
  ap_cmd->add_flag("--insecure", ap.insecure, "Skip TLS verification");
  ap_cmd->add_flag("--replace", ap.replace, "Replace an existing portlet");

  // render / watch
  struct {
    std::string server, portal, user, pass, out, ca_cert, report;
    bool insecure = false;
    std::size_t cycles = 3;
    double interval = 0;
  } cl;
  auto add_client_options = [&cl](CLI::App* cmd) {
    cmd->add_option("--server", cl.server, "Portal server URL")->required();
    cmd->add_option("--portal", cl.portal, "Portal id")->required();
    cmd->add_option("--user", cl.user, "Portal user")->required();
    cmd->add_option("--pass", cl.pass, "Portal password")->required();
    cmd->add_option("--ca-cert", cl.ca_cert, "Trust this PEM for the server");
    cmd->add_flag("--insecure", cl.insecure, "Skip TLS verification");
  };
  auto* render_cmd = app.add_subcommand("render", "Build the portal page once");
  add_client_options(render_cmd);
  render_cmd->add_option("--out", cl.out, "Output directory")->required();
  auto* watch_cmd = app.add_subcommand("watch", "Refresh interval portlets and report changes");
  add_client_options(watch_cmd);
  watch_cmd->add_option("--cycles", cl.cycles, "Refresh cycles")->required();
  watch_cmd->add_option("--interval", cl.interval, "Seconds between cycles")->required();
  watch_cmd->add_option("--report", cl.report, "JSON lines report ('-' for stdout)")->default_val("-");
  watch_cmd->add_option("--out", cl.out, "Re-render into this directory after every cycle");

  // hash-password
  std::string hp_password;
  unsigned hp_iterations = 100000;
  auto* hp_cmd = app.add_subcommand("hash-password", "Print a password_hash value for server.toml");
  hp_cmd->add_option("password", hp_password, "Password (read from stdin when omitted)");
  hp_cmd->add_option("--iterations", hp_iterations, "PBKDF2 iterations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*xpath_cmd) {
      xpath::XPathExpr expr;
      try {
        expr = xpath::compile(xpath_expr);
      } catch (const xpath::SyntaxError& e) {
        print_syntax_error(xpath_expr, e);
        return kExitSyntax;
      }
      std::cout << xpath::render(expr) << "\n";
      if (!xpath_src.file.empty() || !xpath_src.url.empty()) {
        auto doc = load_source(xpath_src);
        for (const auto* n : xpath::evaluate(expr, doc.root())) {
          if (n->kind() == html::NodeKind::attribute) {
            std::cout << n->name() << "=\"" << n->value() << "\"\n";
          } else {
            std::cout << html::serialize(*n) << "\n";
          }
        }
      }
      return 0;
    }

    if (*tree_cmd) {
      std::cout << html::dump_tree(load_source(tree_src).root());
      return 0;
    }

    if (*clip_cmd) {
      std::vector<clip::ClipRule> rules;
      for (const auto* list : {&clip_select, &clip_cut}) {
        for (const auto& p : *list) {
          try {
            rules.push_back(list == &clip_select ? clip::ClipRule::select(p) : clip::ClipRule::cut(p));
          } catch (const xpath::SyntaxError& e) {
            print_syntax_error(p, e);
            return kExitSyntax;
          }
        }
      }
      auto doc = load_source(clip_src);
      try {
        auto f = clip::apply_clip(doc, rules, *clip::parse_policy(clip_policy));
        std::cout << f.html << "\n";
        std::cerr << "digest " << f.digest << "\n";
      } catch (const clip::EmptyClip& e) {
        std::cerr << e.what() << "\n";
        return kExitEmptyClip;
      }
      return 0;
    }

    if (*serve_cmd) {
      auto cfg = server::load_server_config(serve_config);
      server::PortalServer srv(cfg);
      srv.start();
      std::cout << "portal server listening on " << srv.url() << "\n";
      if (!srv.certificate_fingerprint().empty()) {
        std::cout << "certificate SHA-256 fingerprint " << srv.certificate_fingerprint() << "\n";
      }
      std::cout << std::flush;
      wait_for_signal();
      srv.stop();
      return 0;
    }

    if (*tb_cmd) {
      testbed::Options o;
      o.port = static_cast<std::uint16_t>(tb_port);
      o.cors = tb_cors;
      o.page_bytes = tb_bytes;
      testbed::Testbed tb(o);
      tb.start();
      std::cout << "news   " << tb.news_origin() << "/news\n"
                << "grades " << tb.grades_origin() << "/login (" << o.user << " / " << o.pass << ")\n";
      if (!tb_emit.empty()) {
        auto files =
            testbed::write_demo_config(tb_emit, "campus", tb.news_origin(), tb.grades_origin(), o, tb_emit_tls);
        std::cout << "config " << files.server_toml.string() << "\n"
                  << "  export CLIPPORTAL_VAULT_KEY=" << files.vault_passphrase << "\n"
                  << "  portal user " << files.portal_user << " / " << files.portal_pass << ", admin "
                  << files.admin_user << " / " << files.admin_pass << "\n";
      }
      std::cout << std::flush;
      wait_for_signal();
      tb.stop();
      return 0;
    }

    if (*ap_cmd) {
      json rules = json::array();
      for (const auto& s : ap.select) rules.push_back({{"kind", "select"}, {"path", s}});
      for (const auto& s : ap.cut) rules.push_back({{"kind", "cut"}, {"path", s}});
      json portlet{{"title", ap.title.empty() ? ap.portlet_id : ap.title},
                   {"source_url", ap.url},
                   {"clip_rules", rules},
                   {"refresh", ap.interval > 0 ? json{{"policy", "interval"}, {"interval_seconds", ap.interval}}
                                               : json{{"policy", "manual"}, {"interval_seconds", 60}}},
                   {"sanitize_policy", ap.policy}};
      json body{{"replace", ap.replace}};
      if (!ap.login_fields.empty()) {
        json fields = json::object();
        for (const auto& lf : ap.login_fields) {
          auto eq = lf.find('=');
          std::string role = lf.substr(0, eq);
          if (eq == std::string::npos || (role != "user" && role != "pass")) {
            throw CLI::ValidationError("--login-field expects user=<field> or pass=<field>");
          }
          fields[lf.substr(eq + 1)] = role == "user" ? model::kUserPlaceholder : model::kPassPlaceholder;
        }
        std::string login = ap.login_url.empty() ? ap.url : ap.login_url;
        json steps = json::array({json{{"step", "get"}, {"url", login}},
                                  json{{"step", "submit_form"}, {"form_path", ap.form}, {"fields", fields}}});
        if (login != ap.url) steps.push_back({{"step", "get"}, {"url", ap.url}});
        steps.push_back({{"step", "clip"}});
        portlet["workflow"] = steps;
        portlet["credential_ref"] = ap.portlet_id;
        if (!ap.user.empty() || !ap.pass.empty()) body["credential"] = {{"username", ap.user}, {"password", ap.pass}};
      }
      body["portlet"] = portlet;

      http::ClientOptions o;
      if (!ap.ca_cert.empty()) o.ca_cert_pem = read_all(ap.ca_cert);
      o.verify_tls = !ap.insecure;
      http::Client c(o);
      auto base = Url::parse_or_throw(ap.server);
      auto login = c.post_json(Url::parse_or_throw(base.origin() + "/api/login"),
                               json{{"user", ap.admin_user}, {"pass", ap.admin_pass}}.dump());
      if (login.status != 200) {
        std::cerr << "login failed: HTTP " << login.status << " " << login.body << "\n";
        return 1;
      }
      auto token = json::parse(login.body).at("token").get<std::string>();
      http::Request put;
      put.method = "PUT";
      put.url = Url::parse_or_throw(base.origin() + "/api/admin/portal/" + ap.portal + "/portlets/" + ap.portlet_id);
      put.headers = {{"Authorization", "Bearer " + token}};
      put.body = body.dump();
      put.content_type = "application/json";
      auto r = c.send(put, false);
      if (r.status != 200) {
        std::cerr << "HTTP " << r.status << " " << r.body << "\n";
        return r.status == 422 ? kExitSyntax : 1;
      }
      std::cout << "portal " << ap.portal << " now at version " << json::parse(r.body).at("version") << "\n";
      return 0;
    }

    if (*render_cmd) {
      auto session = init_session(cl.server, cl.portal, cl.user, cl.pass, cl.ca_cert, cl.insecure);
      if (!session) return kExitInit;
      for (const auto& r : session->run_all()) {
        if (r.error) std::cerr << r.portlet_id << ": " << *r.error << "\n";
      }
      auto result = session->render_portal(cl.out);
      std::cout << "wrote " << (std::filesystem::path(cl.out) / "portal.html").string() << "\n";
      return result.failed_portlets ? kExitPartial : 0;
    }

    if (*watch_cmd) {
      auto session = init_session(cl.server, cl.portal, cl.user, cl.pass, cl.ca_cert, cl.insecure);
      if (!session) return kExitInit;
      std::uint32_t minimum = 0;
      for (const auto& [id, def] : session->descriptor().portlets) {
        if (def.refresh.policy == model::RefreshPolicy::interval) {
          minimum = minimum == 0 ? def.refresh.interval_seconds : std::min(minimum, def.refresh.interval_seconds);
        }
      }
      if (cl.interval < minimum) {
        std::cerr << "--interval must be at least " << minimum << " s (the smallest portlet refresh interval)\n";
        return 1;
      }
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (cl.report != "-") {
        file.open(cl.report, std::ios::trunc);
        if (!file) throw std::runtime_error("cannot write " + cl.report);
        out = &file;
      }
      std::size_t failures = 0;
      for (const auto& r : session->run_all()) {
        if (r.error) ++failures;
        *out << r.to_json() << "\n";
      }
      if (!cl.out.empty()) session->render_portal(cl.out);
      auto summary = session->watch(cl.cycles, std::chrono::milliseconds(static_cast<long>(cl.interval * 1000)),
                                    [&](const client::ChangeReport& r) {
                                      if (!cl.out.empty()) session->render_portal(cl.out);
                                      *out << r.to_json() << "\n" << std::flush;
                                    });
      *out << summary.to_json() << "\n";
      return failures + summary.errors ? kExitPartial : 0;
    }

    if (*hp_cmd) {
      if (hp_password.empty()) std::getline(std::cin, hp_password);
      std::cout << server::hash_password(hp_password, hp_iterations) << "\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
