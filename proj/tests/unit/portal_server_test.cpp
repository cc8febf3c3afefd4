#include <gtest/gtest.h>

#include <json.hpp>

#include "clipportal/crypto.hpp"
#include "clipportal/http_client.hpp"
#include "clipportal/portal_server.hpp"
#include "clipportal/testbed.hpp"
#include "test_env.hpp"

using namespace clipportal;
using namespace clipportal::server;
using json = nlohmann::json;
using oracle::TempDir;

namespace {

constexpr const char* kVaultKey = "server-test-vault-key";

struct Harness {
  TempDir dir{"server"};
  testbed::Testbed sites;
  ServerConfig cfg;
  std::unique_ptr<PortalServer> server;
  http::Client client;

  explicit Harness(std::function<void(ServerConfig&)> tweak = {}) {
    sites.start();
    oracle::write_text(dir / "campus.json",
                       testbed::portal_descriptor("campus", sites.news_origin(), sites.grades_origin()));
    {
      model::Vault v(dir / "vault.bin", kVaultKey);
      v.put({"grades", "student", "s3cret", {}});
    }
    cfg.port = 0;
    cfg.tls = false;
    cfg.insecure_loopback = true;
    cfg.portals["campus"] = dir / "campus.json";
    cfg.vault_path = dir / "vault.bin";
    cfg.vault_passphrase = kVaultKey;
    cfg.users = {{"alice", "wonderland", "", false}, {"root", "", hash_password("toor", 1000), true}};
    if (tweak) tweak(cfg);
    server = std::make_unique<PortalServer>(cfg);
    server->start();
  }

  Url url(const std::string& path) const { return Url::parse_or_throw(server->url() + path); }

  http::Response login(const std::string& user, const std::string& pass) {
    return client.post_json(url("/api/login"), json{{"user", user}, {"pass", pass}}.dump());
  }

  std::string token(const std::string& user = "alice", const std::string& pass = "wonderland") {
    auto r = login(user, pass);
    EXPECT_EQ(r.status, 200) << r.body;
    return json::parse(r.body).at("token").get<std::string>();
  }

  http::Response get(const std::string& path, const std::string& tok) {
    return client.send({"GET", url(path), {{"Authorization", "Bearer " + tok}}, "", ""}, false);
  }

  http::Response put(const std::string& path, const std::string& tok, const json& body) {
    return client.send({"PUT", url(path), {{"Authorization", "Bearer " + tok}}, body.dump(), "application/json"},
                       false);
  }
};

json news_like_portlet(const std::string& origin) {
  return json{{"title", "Extra"},
              {"source_url", origin + "/news"},
              {"clip_rules", json::array({json{{"kind", "select"}, {"path", "//div[@id='headlines']"}}})}};
}

}  // namespace

TEST(PortalServerAuth, LoginSucceedsAndFails) {
  Harness h;
  auto ok = h.login("alice", "wonderland");
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(json::parse(ok.body).at("token").get<std::string>().size(), 32u);
  EXPECT_EQ(h.login("alice", "wrong").status, 401);
  EXPECT_EQ(h.login("nobody", "wonderland").status, 401);
  EXPECT_EQ(h.login("root", "toor").status, 200);
}

TEST(PortalServerAuth, RateLimitAfterTenFailures) {
  Harness h;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(h.login("alice", "wrong").status, 401) << i;
  auto r = h.login("alice", "wrong");
  EXPECT_EQ(r.status, 429);
  EXPECT_EQ(json::parse(r.body).at("error"), "RateLimited");
  EXPECT_EQ(h.login("alice", "wonderland").status, 429);
}

TEST(PortalServerAuth, TokensAreRequired) {
  Harness h;
  EXPECT_EQ(h.get("/api/portal/campus/descriptor", "bogus").status, 401);
  EXPECT_EQ(h.get("/api/portal/campus/credentials/grades", "bogus").status, 401);
  EXPECT_EQ(h.get("/api/stats", "bogus").status, 401);
}

TEST(PortalServerAuth, PasswordHashes) {
  auto hash = hash_password("pw", 1000);
  EXPECT_TRUE(hash.starts_with("pbkdf2-sha256$1000$"));
  EXPECT_TRUE(verify_password({"u", "", hash, false}, "pw"));
  EXPECT_FALSE(verify_password({"u", "", hash, false}, "pW"));
  EXPECT_FALSE(verify_password({"u", "", "pbkdf2-sha256$zz", false}, "pw"));
  EXPECT_NE(hash_password("pw", 1000), hash);
}

TEST(PortalServerDescriptor, ServesAndConditionallyServes) {
  Harness h;
  auto tok = h.token();
  auto r = h.get("/api/portal/campus/descriptor", tok);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.header("X-Portal-Version"), "1");
  auto d = model::load_descriptor(r.body);
  EXPECT_EQ(d.portal_id, "campus");
  EXPECT_EQ(d.portlets.size(), 3u);

  auto same = h.get("/api/portal/campus/descriptor?if_version=1", tok);
  EXPECT_EQ(same.status, 304);
  EXPECT_TRUE(same.body.empty());
  EXPECT_EQ(h.get("/api/portal/campus/descriptor?if_version=0", tok).status, 200);
  EXPECT_EQ(h.get("/api/portal/nowhere/descriptor", tok).status, 404);
}

TEST(PortalServerCredentials, LoopbackPlaintextAllowedInInsecureMode) {
  Harness h;
  auto tok = h.token();
  auto r = h.get("/api/portal/campus/credentials/grades", tok);
  ASSERT_EQ(r.status, 200);
  auto e = model::credential_from_json(r.body);
  EXPECT_EQ(e.username, "student");
  EXPECT_EQ(e.password, "s3cret");
  EXPECT_EQ(r.header("Cache-Control"), "no-store");
  EXPECT_EQ(h.get("/api/portal/campus/credentials/news", tok).status, 404);
  EXPECT_EQ(h.get("/api/portal/campus/credentials/missing", tok).status, 404);
}

TEST(PortalServerCredentials, PlaintextFromNonLoopbackRejected) {
  auto ip = oracle::non_loopback_ipv4();
  if (!ip) GTEST_SKIP() << "no non-loopback IPv4 interface";
  Harness h([](ServerConfig& c) { c.listen_host = "0.0.0.0"; });
  auto tok = h.token();
  auto remote = Url::parse_or_throw("http://" + *ip + ":" + std::to_string(h.server->port()) +
                                    "/api/portal/campus/credentials/grades");
  auto r = h.client.send({"GET", remote, {{"Authorization", "Bearer " + tok}}, "", ""}, false);
  EXPECT_EQ(r.status, 403);
  EXPECT_EQ(json::parse(r.body).at("error"), "InsecureTransport");

  auto descriptor = remote;
  descriptor.path = "/api/portal/campus/descriptor";
  EXPECT_EQ(h.client.send({"GET", descriptor, {{"Authorization", "Bearer " + tok}}, "", ""}, false).status, 200);
}

TEST(PortalServerCredentials, RefusesPlaintextWithoutInsecureFlag) {
  ServerConfig c;
  c.tls = false;
  EXPECT_THROW(PortalServer{c}, std::runtime_error);
}

TEST(PortalServerTls, SelfSignedCertificateAndCredentialFetch) {
  TempDir certs("tls");
  Harness h([&](ServerConfig& c) {
    c.tls = true;
    c.insecure_loopback = false;
    c.cert_path = certs / "cert.pem";
    c.key_path = certs / "key.pem";
  });
  EXPECT_TRUE(h.server->url().starts_with("https://"));
  EXPECT_TRUE(std::filesystem::exists(certs / "cert.pem"));
  EXPECT_EQ(h.server->certificate_fingerprint(), crypto::certificate_fingerprint(oracle::read_text(certs / "cert.pem")));

  http::Client untrusting;
  EXPECT_THROW(untrusting.post_json(h.url("/api/login"), "{}"), http::FetchError);

  http::ClientOptions trust;
  trust.ca_cert_pem = h.server->certificate_pem();
  http::Client trusting(trust);
  auto login = trusting.post_json(h.url("/api/login"), json{{"user", "alice"}, {"pass", "wonderland"}}.dump());
  ASSERT_EQ(login.status, 200);
  auto tok = json::parse(login.body).at("token").get<std::string>();
  auto r = trusting.send(
      {"GET", h.url("/api/portal/campus/credentials/applet"), {{"Authorization", "Bearer " + tok}}, "", ""}, false);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(model::credential_from_json(r.body).password, "s3cret");
}

TEST(PortalServerAdmin, AddPortletBumpsVersionAndPersists) {
  Harness h;
  auto admin = h.token("root", "toor");
  auto r = h.put("/api/admin/portal/campus/portlets/extra", admin, json{{"portlet", news_like_portlet(h.sites.news_origin())}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(json::parse(r.body).at("version"), 2);
  EXPECT_EQ(h.server->descriptor("campus")->version, 2u);
  auto on_disk = model::load_descriptor(oracle::read_text(h.dir / "campus.json"));
  EXPECT_EQ(on_disk.version, 2u);
  EXPECT_TRUE(on_disk.portlets.contains("extra"));

  auto tok = h.token();
  EXPECT_EQ(h.get("/api/portal/campus/descriptor?if_version=1", tok).status, 200);
  EXPECT_EQ(h.get("/api/portal/campus/descriptor?if_version=2", tok).status, 304);
}

TEST(PortalServerAdmin, ValidationConflictAndRole) {
  Harness h;
  auto admin = h.token("root", "toor");
  auto bad = news_like_portlet(h.sites.news_origin());
  bad["clip_rules"][0]["path"] = "//div[";
  auto r = h.put("/api/admin/portal/campus/portlets/extra", admin, json{{"portlet", bad}});
  EXPECT_EQ(r.status, 422);
  auto problems = json::parse(r.body).at("problems");
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_EQ(problems[0].at("kind"), "RuleError");
  EXPECT_EQ(problems[0].at("location"), "/portlets/extra/clip_rules/0/path");
  EXPECT_EQ(problems[0].at("offset"), 6);

  EXPECT_EQ(h.put("/api/admin/portal/campus/portlets/news", admin,
                  json{{"portlet", news_like_portlet(h.sites.news_origin())}})
                .status,
            409);
  EXPECT_EQ(h.put("/api/admin/portal/campus/portlets/extra", h.token(),
                  json{{"portlet", news_like_portlet(h.sites.news_origin())}})
                .status,
            403);
  EXPECT_EQ(h.server->descriptor("campus")->version, 1u);
}

TEST(PortalServerAdmin, CredentialsGoToTheVault) {
  Harness h;
  auto admin = h.token("root", "toor");
  json p{{"title", "Mail"},
         {"source_url", h.sites.grades_origin() + "/grades"},
         {"clip_rules", json::array({json{{"kind", "select"}, {"path", "//div[@id='grades']"}}})},
         {"workflow", json::array({json{{"step", "get"}, {"url", "/login"}},
                                   json{{"step", "submit_form"},
                                        {"form_path", "//form"},
                                        {"fields", json{{"u", "{user}"}, {"p", "{pass}"}}}},
                                   json{{"step", "clip"}}})},
         {"credential_ref", "mail"}};
  EXPECT_EQ(h.put("/api/admin/portal/campus/portlets/mail", admin, json{{"portlet", p}}).status, 422);
  auto r = h.put("/api/admin/portal/campus/portlets/mail", admin,
                 json{{"portlet", p}, {"credential", json{{"username", "m"}, {"password", "mail-pw"}}}});
  ASSERT_EQ(r.status, 200) << r.body;
  model::Vault v(h.dir / "vault.bin", kVaultKey);
  EXPECT_EQ(v.get("mail").password, "mail-pw");
  auto c = h.get("/api/portal/campus/credentials/mail", h.token());
  EXPECT_EQ(model::credential_from_json(c.body).username, "m");
}

TEST(PortalServerRelay, DisabledByDefault) {
  Harness h;
  auto r = h.get("/api/relay?target=" + percent_encode_form(h.sites.news_origin() + "/news"), h.token());
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(json::parse(r.body).at("error"), "RelayDisabled");
}

TEST(PortalServerRelay, PassThroughContract) {
  Harness h([](ServerConfig& c) { c.relay_enabled = true; });
  auto tok = h.token();
  auto allow = h.server->relay_allowlist();
  EXPECT_EQ(allow.size(), 2u);

  http::Client direct;
  auto upstream = direct.get(Url::parse_or_throw(h.sites.news_origin() + "/news"));
  auto relayed = h.get("/api/relay?target=" + percent_encode_form(h.sites.news_origin() + "/news"), tok);
  ASSERT_EQ(relayed.status, 200);
  EXPECT_EQ(crypto::sha256_hex(relayed.body), crypto::sha256_hex(upstream.body));
  EXPECT_EQ(relayed.header("Content-Type"), upstream.header("Content-Type"));

  auto other = h.get("/api/relay?target=" + percent_encode_form("http://127.0.0.1:1/x"), tok);
  EXPECT_EQ(other.status, 403);
  EXPECT_EQ(json::parse(other.body).at("error"), "ForbiddenOrigin");

  // Redirects are returned, not followed; cookies pass through untouched.
  auto logout = h.get("/api/relay?target=" + percent_encode_form(h.sites.grades_origin() + "/logout"), tok);
  EXPECT_EQ(logout.status, 302);
  EXPECT_EQ(logout.header("Location"), "/login");
  EXPECT_EQ(logout.header("Set-Cookie"), "SID=; Path=/; Max-Age=0");

  auto stats = h.server->stats();
  EXPECT_EQ(stats[TrafficClass::relay].request_count, 3u);
  EXPECT_GE(stats[TrafficClass::relay].bytes_out, upstream.body.size());
}

TEST(PortalServerRelay, UpstreamDownIs502) {
  Harness h([](ServerConfig& c) { c.relay_enabled = true; });
  const std::string dead = "http://127.0.0.1:" + std::to_string(oracle::closed_port());
  auto added = h.put("/api/admin/portal/campus/portlets/dead", h.token("root", "toor"),
                     json{{"portlet", news_like_portlet(dead)}});
  ASSERT_EQ(added.status, 200);
  auto r = h.get("/api/relay?target=" + percent_encode_form(dead + "/news"), h.token());
  EXPECT_EQ(r.status, 502);
}

TEST(PortalServerStats, CountersAreZeroThenCountThenNeverDecrease) {
  Harness h;
  auto fresh = h.server->stats();
  EXPECT_EQ(fresh.total().request_count, 0u);
  EXPECT_EQ(fresh.total().bytes_out, 0u);
  EXPECT_EQ(fresh.total().bytes_in, 0u);

  auto tok = h.token();
  h.get("/api/portal/campus/descriptor", tok);
  auto s1 = h.server->stats();
  EXPECT_EQ(s1[TrafficClass::auth].request_count, 1u);
  EXPECT_EQ(s1[TrafficClass::descriptor].request_count, 1u);
  EXPECT_EQ(s1[TrafficClass::credentials].request_count, 0u);

  auto over_http = json::parse(h.get("/api/stats", tok).body);
  EXPECT_EQ(over_http.at("descriptor").at("request_count"), 1);

  h.get("/api/portal/campus/credentials/grades", tok);
  h.get("/ui/", tok);
  auto s2 = h.server->stats();
  for (std::size_t i = 0; i < kTrafficClasses; ++i) {
    EXPECT_GE(s2.classes[i].bytes_out, s1.classes[i].bytes_out);
    EXPECT_GE(s2.classes[i].bytes_in, s1.classes[i].bytes_in);
    EXPECT_GE(s2.classes[i].request_count, s1.classes[i].request_count);
  }
  EXPECT_EQ(s2[TrafficClass::credentials].request_count, 1u);
  EXPECT_EQ(s2[TrafficClass::assets].request_count, 1u);
  EXPECT_EQ(s2[TrafficClass::admin].request_count, 1u);
}

TEST(PortalServerLog, SecretsOnlyInCredentialResponsesAndRedacted) {
  Harness h;
  auto tok = h.token();
  h.get("/api/portal/campus/descriptor", tok);
  h.get("/api/portal/campus/credentials/grades", tok);
  h.put("/api/admin/portal/campus/portlets/x", h.token("root", "toor"),
        json{{"portlet", news_like_portlet(h.sites.news_origin())}});
  auto log = h.server->request_log();
  ASSERT_EQ(log.size(), 5u);
  for (const auto& e : log) {
    auto line = e.to_json();
    EXPECT_EQ(line.find("s3cret"), std::string::npos) << line;
    EXPECT_EQ(line.find("wonderland"), std::string::npos) << line;
    EXPECT_EQ(line.find("toor"), std::string::npos) << line;
    EXPECT_EQ(line.find(tok), std::string::npos) << line;
  }
  EXPECT_EQ(log[2].traffic_class, TrafficClass::credentials);
  EXPECT_EQ(log[2].response_body, "[redacted]");
}

TEST(PortalServerUi, StubAndStaticFiles) {
  Harness stub;
  auto page = stub.client.get(stub.url("/ui/"));
  EXPECT_EQ(page.status, 200);
  EXPECT_NE(page.body.find("/api/login"), std::string::npos);
  EXPECT_EQ(stub.client.send({"GET", stub.url("/ui"), {}, "", ""}, false).status, 302);

  TempDir ui("ui");
  oracle::write_text(ui / "index.html", "<!DOCTYPE html><title>portal</title>");
  oracle::write_text(ui / "app.js", "export const x = 1;\n");
  oracle::write_text(ui.path().parent_path() / "outside.txt", "secret");
  Harness h([&](ServerConfig& c) { c.ui_dir = ui.path(); });
  EXPECT_EQ(h.client.get(h.url("/ui/")).body, "<!DOCTYPE html><title>portal</title>");
  auto js = h.client.get(h.url("/ui/app.js"));
  EXPECT_EQ(js.status, 200);
  EXPECT_EQ(js.header("Content-Type"), "text/javascript");
  EXPECT_EQ(h.client.get(h.url("/ui/missing.css")).status, 404);
  EXPECT_EQ(h.client.get(h.url("/ui/%2e%2e/outside.txt")).status, 404);
  std::filesystem::remove(ui.path().parent_path() / "outside.txt");
}

TEST(ServerConfigFile, ParsesAndResolvesPaths) {
  TempDir dir("config");
  oracle::write_text(dir / "server.toml", R"(
[listen]
host = "0.0.0.0"
port = 9443
tls = true

[tls]
cert = "certs/cert.pem"
key = "/etc/key.pem"

[portals]
campus = "campus.json"

[vault]
path = "vault.bin"
passphrase_env = "MY_KEY"

[relay]
enabled = true
allowlist = "none"

[auth]
token_ttl_seconds = 60
rate_limit_failures = 3

[[users]]
name = "alice"
password = "pw"

[[users]]
name = "root"
password_hash = "pbkdf2-sha256$1$00$00"
admin = true
)");
  auto c = load_server_config(dir / "server.toml");
  EXPECT_EQ(c.listen_host, "0.0.0.0");
  EXPECT_EQ(c.port, 9443);
  EXPECT_EQ(c.cert_path, dir / "certs/cert.pem");
  EXPECT_EQ(c.key_path, "/etc/key.pem");
  EXPECT_EQ(c.portals.at("campus"), dir / "campus.json");
  EXPECT_EQ(c.vault_passphrase_env, "MY_KEY");
  EXPECT_TRUE(c.relay_enabled);
  EXPECT_EQ(c.relay_allowlist, "none");
  EXPECT_EQ(c.token_ttl.count(), 60);
  EXPECT_EQ(c.rate_limit_failures, 3);
  ASSERT_EQ(c.users.size(), 2u);
  EXPECT_TRUE(c.users[1].admin);

  oracle::write_text(dir / "bad.toml", "[relay]\nallowlist = \"everything\"\n");
  EXPECT_THROW(load_server_config(dir / "bad.toml"), std::runtime_error);
}
