#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "clipportal/portal_model.hpp"

namespace fs = std::filesystem;
using namespace clipportal;
using namespace clipportal::model;

namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(fs::path(FIXTURE_DIR) / "descriptors" / name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string minimal_with(const std::string& find, const std::string& replace) {
  std::string text = read_fixture("minimal.json");
  auto pos = text.find(find);
  EXPECT_NE(pos, std::string::npos) << find;
  return text.replace(pos, find.size(), replace);
}

DescriptorError load_error(const std::string& text) {
  try {
    load_descriptor(text);
  } catch (const DescriptorError& e) {
    return e;
  }
  ADD_FAILURE() << "expected DescriptorError";
  return DescriptorError({});
}

PortletDefinition login_portlet() {
  PortletDefinition p;
  p.portlet_id = "grades";
  p.source_url = "http://grades.example/grades";
  p.clip_rules = {clip::ClipRule::select("//div[@id='grades']")};
  p.workflow = {WorkflowStep::get("http://grades.example/login"),
                WorkflowStep::submit_form("//form", {{"u", "{user}"}, {"p", "{pass}"}}),
                WorkflowStep::clip()};
  p.credential_ref = "grades";
  return p;
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("clipportal-model-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto p = dir / name;
  fs::remove(p);
  return p;
}

std::string random_utf8(std::mt19937& rng, std::size_t max_len) {
  static const char* pieces[] = {"a", "Z", "0", " ", "\"", "\\", "{", "}", "\xc3\xa9", "\xe2\x82\xac",
                                 "\xf0\x9f\x94\x91", "\n", "\t", "\xd7\x90", "%", "&", "="};
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
  std::string out;
  for (std::size_t n = len(rng); n > 0; --n) out += pieces[pick(rng)];
  return out;
}

}  // namespace

TEST(Descriptor, MinimalLoads) {
  auto d = load_descriptor(read_fixture("minimal.json"));
  EXPECT_EQ(d.version, 1u);
  EXPECT_EQ(d.portal_id, "campus");
  ASSERT_EQ(d.portlets.size(), 1u);
  const auto& news = d.portlets.at("news");
  EXPECT_EQ(news.refresh.policy, RefreshPolicy::interval);
  EXPECT_EQ(news.sanitize_policy, clip::SanitizePolicy::strict);
  EXPECT_EQ(news.mode, PortletMode::view);
  EXPECT_EQ(news.window_state, WindowState::normal);
  auto wf = news.effective_workflow();
  ASSERT_EQ(wf.size(), 2u);
  EXPECT_EQ(wf[0].kind, WorkflowStep::Kind::get);
  EXPECT_EQ(wf[0].url, "http://news.example/news");
  EXPECT_EQ(wf[1].kind, WorkflowStep::Kind::clip);
}

TEST(Descriptor, FullRoundTrip) {
  auto d = load_descriptor(read_fixture("full.json"));
  EXPECT_EQ(d.version, 7u);
  EXPECT_EQ(d.portlets.at("grades").window_state, WindowState::maximized);
  EXPECT_EQ(d.portlets.at("applet").sanitize_policy, clip::SanitizePolicy::trusted);
  EXPECT_EQ(d.portlets.at("grades").clip_rules[2].change, clip::ChangeSpec::replace_text("Grades", "Marks"));
  auto again = load_descriptor(serialize_descriptor(d));
  EXPECT_EQ(again, d);
  EXPECT_EQ(serialize_descriptor(again), serialize_descriptor(d));
  EXPECT_EQ(d.source_origins(), (std::vector<std::string>{"http://grades.example", "http://news.example"}));
}

TEST(Descriptor, LayoutReferenceMissing) {
  auto e = load_error(minimal_with("[[\"news\"]]", "[[\"news\", \"x\"]]"));
  ASSERT_EQ(e.problems().size(), 1u);
  EXPECT_EQ(e.problems()[0].kind, Problem::Kind::reference);
  EXPECT_NE(e.problems()[0].message.find("\"x\""), std::string::npos);
}

TEST(Descriptor, OrphanPortlet) {
  auto e = load_error(minimal_with("[[\"news\"]]", "[]"));
  EXPECT_TRUE(e.has(Problem::Kind::reference));
}

TEST(Descriptor, BadXPathIsRuleError) {
  auto e = load_error(minimal_with("//div[@id='headlines']", "div["));
  ASSERT_EQ(e.problems().size(), 1u);
  EXPECT_EQ(e.problems()[0].kind, Problem::Kind::rule);
  EXPECT_EQ(e.problems()[0].location, "/portlets/news/clip_rules/0/path");
  EXPECT_EQ(e.problems()[0].offset, 4u);
}

TEST(Descriptor, SchemaErrors) {
  EXPECT_TRUE(load_error(minimal_with("\"title\": \"News\"", "\"colour\": \"red\"")).has(Problem::Kind::schema));
  EXPECT_TRUE(load_error(minimal_with("\"title\": \"News\"", "\"title\": 3")).has(Problem::Kind::schema));
  EXPECT_TRUE(load_error(minimal_with("\"kind\": \"select\"", "\"kind\": \"grab\"")).has(Problem::Kind::schema));
  EXPECT_TRUE(load_error("{not json").has(Problem::Kind::schema));
  EXPECT_TRUE(load_error("[]").has(Problem::Kind::schema));
  EXPECT_TRUE(load_error(minimal_with("\"campus\",", "\"campus\", \"version\": 0,")).has(Problem::Kind::schema));
}

TEST(Descriptor, NeverCarriesSecrets) {
  auto d = load_descriptor(read_fixture("full.json"));
  std::string text = serialize_descriptor(d);
  EXPECT_EQ(text.find("password"), std::string::npos);
  EXPECT_EQ(text.find("username"), std::string::npos);
}

TEST(Workflow, LoginWithCredentialRefOk) {
  EXPECT_TRUE(validate_workflow(login_portlet()).empty());
}

TEST(Workflow, PlaceholderNeedsCredentialRef) {
  auto p = login_portlet();
  p.credential_ref.reset();
  auto errors = validate_workflow(p);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0], "credential_ref required");
}

TEST(Workflow, ClipMustBeLast) {
  auto p = login_portlet();
  std::swap(p.workflow[1], p.workflow[2]);
  auto errors = validate_workflow(p);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("terminal clip"), std::string::npos);
}

TEST(Workflow, OtherInvariants) {
  auto p = login_portlet();
  p.refresh.interval_seconds = 0;
  EXPECT_EQ(validate_workflow(p).size(), 1u);
  p = login_portlet();
  p.clip_rules = {clip::ClipRule::cut("//script")};
  EXPECT_EQ(validate_workflow(p).size(), 1u);
  p = login_portlet();
  p.workflow[1].fields = {{"u", "alice"}};
  EXPECT_EQ(validate_workflow(p).size(), 1u);  // stray credential_ref
  p = login_portlet();
  p.source_url = "/relative";
  EXPECT_FALSE(validate_workflow(p).empty());
}

TEST(Mutation, VersionStrictlyIncreases) {
  auto d = load_descriptor(read_fixture("minimal.json"));
  std::uint64_t last = d.version;
  auto check = [&](const PortalDescriptor& next) {
    EXPECT_GT(next.version, last);
    last = next.version;
    EXPECT_TRUE(validate_descriptor(next).empty());
    return next;
  };
  d = check(with_portlet_added(d, login_portlet()));
  EXPECT_EQ(d.layout.back(), std::vector<std::string>{"grades"});
  auto replaced = login_portlet();
  replaced.title = "Marks";
  d = check(with_portlet_replaced(d, replaced));
  d = check(with_window_state(d, "news", WindowState::minimized));
  d = check(with_portlet_removed(d, "grades"));
  EXPECT_EQ(d.layout.size(), 1u);
  EXPECT_THROW(with_portlet_added(d, [] {
                 auto p = login_portlet();
                 p.portlet_id = "news";
                 return p;
               }()),
               DuplicatePortlet);
  EXPECT_THROW(with_portlet_removed(d, "nope"), NotFound);
  auto bad = login_portlet();
  bad.credential_ref.reset();
  EXPECT_THROW(with_portlet_added(d, bad), DescriptorError);
}

TEST(Vault, PutGetRoundTrip) {
  auto path = temp_path("roundtrip.bin");
  CredentialEntry e{"grades", "student", "s3cret", {{"campus", "main"}}};
  {
    Vault v(path, "master pass");
    v.put(e);
    EXPECT_EQ(v.get("grades"), e);
  }
  Vault reopened(path, "master pass");
  EXPECT_EQ(reopened.get("grades"), e);
  EXPECT_EQ(reopened.services(), std::vector<std::string>{"grades"});
  EXPECT_THROW(reopened.get("mail"), NotFound);
}

TEST(Vault, WrongKeyIsAuthError) {
  auto path = temp_path("wrongkey.bin");
  {
    Vault v(path, "right");
    v.put({"svc", "u", "p", {}});
  }
  EXPECT_THROW(Vault(path, "wrong"), AuthError);
  EXPECT_THROW(Vault(path, ""), AuthError);
}

TEST(Vault, FileHoldsNoPlaintext) {
  auto path = temp_path("plain.bin");
  Vault v(path, "k");
  v.put({"svc", "needle-user", "needle-pass", {}});
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string image = ss.str();
  EXPECT_EQ(image.substr(0, 4), "CDV1");
  EXPECT_EQ(image.find("needle"), std::string::npos);
}

TEST(Vault, BitFlipsDetected) {
  std::map<std::string, CredentialEntry> entries{{"svc", {"svc", "u", "p", {}}}};
  std::string image = Vault::seal_image(entries, "k");
  std::mt19937 rng(3);
  std::uniform_int_distribution<std::size_t> byte(0, image.size() - 1);
  std::uniform_int_distribution<int> bit(0, 7);
  for (int i = 0; i < 20; ++i) {
    std::string t = image;
    t[byte(rng)] ^= static_cast<char>(1 << bit(rng));
    EXPECT_THROW(Vault::open_image(t, "k"), AuthError);
  }
  EXPECT_THROW(Vault::open_image(image.substr(0, image.size() - 1), "k"), AuthError);
  EXPECT_EQ(Vault::open_image(image, "k"), entries);
}

TEST(Vault, ArbitraryUtf8RoundTrip) {
  std::mt19937 rng(11);
  std::map<std::string, CredentialEntry> entries;
  for (int i = 0; i < 40; ++i) {
    CredentialEntry e{"svc" + std::to_string(i), random_utf8(rng, 20), random_utf8(rng, 30), {}};
    for (int k = 0; k < i % 3; ++k) e.extra_fields.emplace_back("f" + std::to_string(k), random_utf8(rng, 8));
    entries.emplace(e.service_id, e);
  }
  std::string pass = random_utf8(rng, 12);
  EXPECT_EQ(Vault::open_image(Vault::seal_image(entries, pass), pass), entries);
}
