// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clipportal/clip.hpp"
#include "clipportal/headless_client.hpp"
#include "clipportal/html_tree.hpp"
#include "clipportal/portal_model.hpp"
#include "clipportal/xpath.hpp"
#include "stack.hpp"
#include "xpath_oracle.hpp"

using namespace clipportal;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && first_failure_.empty()) first_failure_ = what;
    ok_ = ok_ && ok;
  }
  bool ok() const { return ok_; }
  const std::string& first_failure() const { return first_failure_; }

 private:
  bool ok_ = true;
  std::string first_failure_;
};

Outcome finish(const Check& c, const std::string& summary) {
  if (c.ok()) return {true, summary};
  return {false, summary + "; first failure: " + c.first_failure()};
}

const client::ChangeReport* report_for(const std::vector<client::ChangeReport>& reports, const std::string& id) {
  for (const auto& r : reports) {
    if (r.portlet_id == id) return &r;
  }
  return nullptr;
}

// 1
Outcome xpath_oracle_equivalence() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937 rng(1061);
  const int cases = 1000;
  int equal = 0;
  std::string mismatch;
  for (int i = 0; i < cases; ++i) {
    auto d = oracle::random_document(rng, 50);
    auto e = oracle::random_expression(rng);
    auto nodes = oracle::all_nodes_in_document_order(*d);
    const html::Node* context =
        i % 2 ? d.get() : nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)];
    if (xpath::evaluate(e, *context) == oracle::oracle_evaluate(e, *context)) {
      ++equal;
    } else if (mismatch.empty()) {
      mismatch = xpath::render(e);
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Check c;
  c.expect(equal == cases, "mismatch on " + mismatch);
  c.expect(secs < 30.0, "runtime over 30 s");
  std::ostringstream s;
  s << equal << "/" << cases << " equal in " << secs << " s";
  return finish(c, s.str());
}

// 2
Outcome server_bandwidth() {
  std::uint64_t bytes[2] = {0, 0};
  std::size_t sizes[2] = {1024, 1024 * 1024};
  std::uint64_t delta = 1;
  std::size_t reports = 0;
  for (int run = 0; run < 2; ++run) {
    oracle::StackOptions o;
    o.page_bytes = sizes[run];
    oracle::Stack s(o);
    auto session = s.session();
    auto after_init = s.server->stats().total();
    bytes[run] = after_init.bytes_out;
    if (run == 1) {
      session->run_all();
      std::size_t n = 0;
      session->watch(10, std::chrono::milliseconds(0), [&](const client::ChangeReport&) { ++n; });
      reports = n;
      delta = s.server->stats().total().request_count - after_init.request_count;
    }
  }
  Check c;
  c.expect(bytes[0] == bytes[1], "bytes_out differs");
  c.expect(delta == 0, "portal-server requests after init");
  c.expect(reports == 30, "expected 30 watch reports");
  std::ostringstream s;
  s << "bytes_out 1KB=" << bytes[0] << " 1MB=" << bytes[1] << ", post-init server requests over 10 cycles="
    << delta;
  return finish(c, s.str());
}

// 3
Outcome changed_portlets_only() {
  oracle::Stack s;
  auto session = s.session();
  oracle::TempDir out("accept-render");
  auto first_reports = session->run_all();
  auto first = session->render_portal(out.path());
  s.sites.mutate("news");
  auto reports = session->refresh_many({"news", "grades", "applet"}, 1);
  auto second = session->render_portal(out.path());

  std::size_t changed = 0;
  for (const auto& r : reports) changed += r.changed ? 1 : 0;
  std::vector<std::string> fragments;
  for (const auto& p : second.written) {
    auto name = p.filename().string();
    if (name.starts_with("portlet-")) fragments.push_back(name);
  }
  Check c;
  c.expect(first.written.size() == 4, "initial render should write 4 files");
  c.expect(reports.size() == 3, "expected 3 reports");
  c.expect(changed == 1, "changed count");
  auto news = report_for(reports, "news");
  c.expect(news && news->changed, "news report not changed");
  c.expect(fragments == std::vector<std::string>{"portlet-news.html"}, "rewritten fragment files");
  std::ostringstream out_text;
  out_text << changed << "/3 reports changed, fragment files rewritten=" << fragments.size();
  return finish(c, out_text.str());
}

// 4
Outcome absolute_links() {
  oracle::Stack s;
  auto session = s.session();
  session->run_all();
  const std::set<std::string> origins = {s.sites.news_origin(), s.sites.grades_origin()};
  const std::string portal_origin = Url::parse_or_throw(s.server->url()).origin();

  std::vector<std::pair<std::string, std::string>> fragments;  // label, html
  for (const auto& id : {"news", "grades", "applet"}) {
    auto st = session->state(id);
    if (st.fragment) fragments.emplace_back(std::string("portlet ") + id, st.fragment->html);
  }
  http::Client fetch({}, &session->jar());
  const std::vector<std::string> pages = {s.sites.news_origin() + "/news", s.sites.news_origin() + "/news/page2",
                                          s.sites.grades_origin() + "/login", s.sites.grades_origin() + "/grades",
                                          s.sites.grades_origin() + "/applet"};
  for (const auto& page : pages) {
    auto url = Url::parse_or_throw(page);
    auto r = fetch.get(url);
    auto doc = html::parse_html(r.body, url);
    auto f = clip::apply_clip(doc, {clip::ClipRule::select("/html/body")}, clip::SanitizePolicy::trusted);
    fragments.emplace_back(page, f.html);
  }

  Check c;
  c.expect(fragments.size() == 8, "missing fragments");
  std::size_t links = 0;
  std::function<void(const html::Node&, const std::string&)> walk = [&](const html::Node& n,
                                                                       const std::string& label) {
    if (n.is_element()) {
      for (const auto& a : n.attributes()) {
        bool link = clip::is_link_attribute(a->name()) || (a->name() == "data" && n.name() == "object");
        if (!link || a->value().starts_with("#")) continue;
        ++links;
        auto u = Url::parse(a->value());
        c.expect(u && origins.contains(u->origin()), label + ": " + a->name() + "=" + a->value());
      }
    }
    for (const auto& child : n.children()) walk(*child, label);
  };
  std::size_t portal_mentions = 0;
  for (const auto& [label, text] : fragments) {
    walk(*html::parse_fragment(text), label);
    if (text.find(portal_origin) != std::string::npos) ++portal_mentions;
  }
  c.expect(portal_mentions == 0, "portal origin in a fragment");
  c.expect(links > 0, "no links found");
  std::ostringstream out_text;
  out_text << links << " links in " << fragments.size() << " fragments, all absolute to a source origin; portal origin "
           << "occurrences=" << portal_mentions;
  return finish(c, out_text.str());
}

// 5
Outcome client_side_cookies() {
  oracle::Stack s;
  auto session = s.session();
  auto reports = session->run_all();
  session->watch(2, std::chrono::milliseconds(0));

  Check c;
  for (const auto& r : reports) c.expect(!r.error, r.portlet_id + ": " + r.error.value_or(""));
  auto sid = session->jar().find(s.sites.grades_origin(), "SID");
  c.expect(sid.has_value(), "no SID for the grades origin");
  c.expect(!session->jar().find(s.sites.news_origin(), "SID"), "SID visible to the news origin");
  auto sids = s.sites.issued_sids();
  c.expect(!sids.empty(), "no SID issued");
  std::size_t log_lines = 0;
  std::size_t leaks = 0;
  for (const auto& e : s.server->request_log()) {
    ++log_lines;
    auto line = e.to_json();
    for (const auto& v : sids) leaks += line.find(v) != std::string::npos ? 1 : 0;
    leaks += line.find("SID=") != std::string::npos ? 1 : 0;
  }
  c.expect(leaks == 0, "producer cookie in the portal-server log");

  auto applet = session->state("applet");
  c.expect(applet.fragment && applet.fragment->html.find("<object") != std::string::npos, "object element dropped");
  bool fetched_with_sid = false;
  for (const auto& hit : s.sites.hits()) {
    if (hit.path == "/applet/lab.bin" && hit.status == 200 && sid &&
        hit.cookie.find("SID=" + sid->value) != std::string::npos) {
      fetched_with_sid = true;
    }
  }
  c.expect(fetched_with_sid, "applet object not fetched with SID");
  std::ostringstream out_text;
  out_text << "SID scoped to grades origin, " << log_lines << " log entries with " << leaks
           << " producer cookie values, applet object fetched with SID=" << (fetched_with_sid ? "yes" : "no");
  return finish(c, out_text.str());
}

// 6
Outcome vault_and_transport() {
  Check c;
  std::string transport;
  auto ip = oracle::non_loopback_ipv4();
  if (!ip) {
    c.expect(false, "no non-loopback IPv4 interface to test from");
  } else {
    oracle::StackOptions o;
    o.listen_host = "0.0.0.0";
    oracle::Stack s(o);
    http::Client hc;
    auto login = hc.post_json(Url::parse_or_throw(s.server->url() + "/api/login"),
                              json{{"user", s.files.portal_user}, {"pass", s.files.portal_pass}}.dump());
    auto token = json::parse(login.body).at("token").get<std::string>();
    auto remote = Url::parse_or_throw("http://" + *ip + ":" + std::to_string(s.server->port()) +
                                      "/api/portal/campus/credentials/grades");
    auto r = hc.send({"GET", remote, {{"Authorization", "Bearer " + token}}, "", ""}, false);
    c.expect(r.status == 403 && r.body.find("InsecureTransport") != std::string::npos,
             "plaintext credential fetch from " + *ip + " answered " + std::to_string(r.status));
    transport = "plaintext fetch via " + *ip + " -> " + std::to_string(r.status);
  }

  std::map<std::string, model::CredentialEntry> entries = {{"grades", {"grades", "student", "s3cret", {}}}};
  const std::string key = "acceptance-vault-key";
  const auto image = model::Vault::seal_image(entries, key);
  std::mt19937 rng(6);
  std::uniform_int_distribution<std::size_t> bit(0, image.size() * 8 - 1);
  int detected = 0;
  for (int i = 0; i < 100; ++i) {
    auto t = image;
    auto b = bit(rng);
    t[b / 8] = static_cast<char>(t[b / 8] ^ (1 << (b % 8)));
    try {
      model::Vault::open_image(t, key);
    } catch (const model::AuthError&) {
      ++detected;
    }
  }
  c.expect(detected == 100, "undetected bit flip");

  int wrong = 0;
  const int wrong_trials = 10;
  for (int i = 0; i < wrong_trials; ++i) {
    try {
      model::Vault::open_image(image, key + std::to_string(i));
    } catch (const model::AuthError&) {
      ++wrong;
    }
  }
  c.expect(wrong == wrong_trials, "wrong key accepted");
  c.expect(model::Vault::open_image(image, key) == entries, "right key rejected");
  std::ostringstream s;
  s << transport << ", bit flips detected " << detected << "/100, wrong keys rejected " << wrong << "/"
    << wrong_trials;
  return finish(c, s.str());
}

// 7
std::string collapse(const std::string& s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += ch;
  }
  return out;
}

bool links_consistent(const html::Node& n) {
  for (const auto& c : n.children()) {
    if (c->parent() != &n || !links_consistent(*c)) return false;
  }
  for (const auto& a : n.attributes()) {
    if (a->parent() != &n) return false;
  }
  return true;
}

json observed_facts(const html::Document& d) {
  json hrefs = json::array(), srcs = json::array(), ids = json::array();
  std::function<void(const html::Node&)> walk = [&](const html::Node& n) {
    if (n.is_element()) {
      if (n.name() == "a" && n.attr("href")) hrefs.push_back(std::string(*n.attr("href")));
      if (n.name() == "img") srcs.push_back(std::string(n.attr("src").value_or("")));
      if (n.attr("id")) ids.push_back(std::string(*n.attr("id")));
    }
    for (const auto& c : n.children()) walk(*c);
  };
  walk(d.root());
  return {{"hrefs", hrefs}, {"srcs", srcs}, {"ids", ids},
          {"body_text", d.body() ? collapse(html::text_content(*d.body())) : ""}};
}

Outcome tag_soup_corpus() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fs::path(FIXTURE_DIR) / "soup")) {
    if (e.path().extension() == ".html") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  const std::vector<std::string> selectors = {
      "//a",          "//a/@href",         "//img/@src",     "//td",          "//table//a",
      "//tr/td[2]",   "//li[2]",           "//p[1]",         "//div[@id]",    "//*[@class='lnk']",
      "/html/body/*", "//body//text()",    "//ul/li/a",      "//dl/dd",       "//select/option[@selected]",
      "//form//*",    "//h2/..",           "//*[contains(text(),'fish')]", "//center/font", "//pre/text()"};
  std::vector<xpath::XPathExpr> compiled;
  for (const auto& s : selectors) compiled.push_back(xpath::compile(s));

  Check c;
  std::size_t parsed = 0, facts_equal = 0, selector_runs = 0, selector_equal = 0;
  std::mt19937 rng(7007);
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    const std::string bytes = oracle::read_text(f);
    try {
      auto d = html::parse_html(bytes, "http://soup.example/dir/page.html");
      bool ok = d.html() && d.body() && links_consistent(d.root());
      auto again = html::parse_html("\xEF\xBB\xBF" + html::serialize(d.root()), "http://soup.example/dir/page.html");
      ok = ok && html::dump_tree(again.root()) == html::dump_tree(d.root());
      c.expect(ok, name + ": structure or round trip");
      parsed += ok ? 1 : 0;

      auto expect = json::parse(oracle::read_text(fs::path(f).replace_extension(".expect.json")));
      bool same = observed_facts(d) == expect;
      c.expect(same, name + ": facts differ from the reference parser");
      facts_equal += same ? 1 : 0;

      auto nodes = oracle::all_nodes_in_document_order(d.root());
      std::vector<xpath::XPathExpr> exprs = compiled;
      for (int i = 0; i < 20; ++i) exprs.push_back(oracle::random_expression(rng));
      for (const auto& e : exprs) {
        for (const html::Node* context :
             {static_cast<const html::Node*>(&d.root()),
              nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)]}) {
          ++selector_runs;
          bool eq = xpath::evaluate(e, *context) == oracle::oracle_evaluate(e, *context);
          c.expect(eq, name + ": " + xpath::render(e));
          selector_equal += eq ? 1 : 0;
        }
      }
    } catch (const std::exception& ex) {
      c.expect(false, name + ": " + ex.what());
    }
  }
  c.expect(files.size() == 50, "corpus should hold 50 files");
  std::ostringstream s;
  s << parsed << "/" << files.size() << " parsed, " << facts_equal << "/" << files.size()
    << " match reference facts, selectors " << selector_equal << "/" << selector_runs << " equal to oracle";
  return finish(c, s.str());
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "XPath oracle equivalence", xpath_oracle_equivalence},
      {2, "Low portal-server bandwidth", server_bandwidth},
      {3, "Only changed portlets reload", changed_portlets_only},
      {4, "Fragment links absolute to source origins", absolute_links},
      {5, "Login cookies stay on the client", client_side_cookies},
      {6, "Vault and transport", vault_and_transport},
      {7, "Tag-soup robustness", tag_soup_corpus},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << cr.number << ". " << cr.name << ": " << o.detail
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << (7 - failed) << "/7" << std::endl;
  return failed ? 1 : 0;
}
