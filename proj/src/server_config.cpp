#include <charconv>

#include <toml.hpp>

#include "clipportal/crypto.hpp"
#include "clipportal/portal_server.hpp"

namespace clipportal::server {

namespace {

std::filesystem::path relative_to(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

crypto::Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2) throw std::invalid_argument("odd hex length");
  crypto::Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto [p, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, out[i], 16);
    if (ec != std::errc{}) throw std::invalid_argument("bad hex");
  }
  return out;
}

}  // namespace

ServerConfig load_server_config(const std::filesystem::path& path) {
  toml::table t;
  try {
    t = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    throw std::runtime_error("server config " + path.string() + ": " + std::string(e.description()));
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  ServerConfig c;

  c.listen_host = t["listen"]["host"].value_or(c.listen_host);
  c.port = static_cast<std::uint16_t>(t["listen"]["port"].value_or<int64_t>(c.port));
  c.tls = t["listen"]["tls"].value_or(c.tls);
  c.insecure_loopback = t["listen"]["insecure_loopback"].value_or(c.insecure_loopback);

  if (auto cert = t["tls"]["cert"].value<std::string>()) c.cert_path = relative_to(base, *cert);
  if (auto key = t["tls"]["key"].value<std::string>()) c.key_path = relative_to(base, *key);

  if (auto portals = t["portals"].as_table()) {
    for (const auto& [id, node] : *portals) {
      auto file = node.value<std::string>();
      if (!file) throw std::runtime_error("server config: portals." + std::string(id.str()) + " must be a path");
      c.portals.emplace(std::string(id.str()), relative_to(base, *file));
    }
  }

  if (auto vault = t["vault"]["path"].value<std::string>()) c.vault_path = relative_to(base, *vault);
  c.vault_passphrase_env = t["vault"]["passphrase_env"].value_or(c.vault_passphrase_env);

  c.relay_enabled = t["relay"]["enabled"].value_or(c.relay_enabled);
  c.relay_allowlist = t["relay"]["allowlist"].value_or(c.relay_allowlist);
  if (c.relay_allowlist != "portlet-origins" && c.relay_allowlist != "none") {
    throw std::runtime_error("server config: relay.allowlist must be \"portlet-origins\" or \"none\"");
  }

  if (auto ui = t["ui"]["dir"].value<std::string>()) c.ui_dir = relative_to(base, *ui);
  if (auto log = t["log"]["requests"].value<std::string>()) c.request_log = relative_to(base, *log);

  c.token_ttl = std::chrono::seconds(t["auth"]["token_ttl_seconds"].value_or<int64_t>(c.token_ttl.count()));
  c.rate_limit_failures = t["auth"]["rate_limit_failures"].value_or(c.rate_limit_failures);
  c.rate_limit_window =
      std::chrono::seconds(t["auth"]["rate_limit_window_seconds"].value_or<int64_t>(c.rate_limit_window.count()));

  if (auto users = t["users"].as_array()) {
    for (const auto& node : *users) {
      const auto* u = node.as_table();
      if (!u) throw std::runtime_error("server config: [[users]] entries must be tables");
      PortalUser pu;
      pu.name = (*u)["name"].value_or(std::string());
      pu.password = (*u)["password"].value_or(std::string());
      pu.password_hash = (*u)["password_hash"].value_or(std::string());
      pu.admin = (*u)["admin"].value_or(false);
      if (pu.name.empty() || (pu.password.empty() && pu.password_hash.empty())) {
        throw std::runtime_error("server config: user entries need name and password or password_hash");
      }
      c.users.push_back(std::move(pu));
    }
  }
  return c;
}

std::string hash_password(std::string_view password, unsigned iterations) {
  auto salt = crypto::random_bytes(16);
  auto hash = crypto::pbkdf2_sha256(password, salt, iterations, 32);
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + crypto::to_hex(salt) + "$" + crypto::to_hex(hash);
}

bool verify_password(const PortalUser& user, std::string_view password) {
  if (!user.password_hash.empty()) {
    auto parts = split(user.password_hash, '$');
    if (parts.size() != 4 || parts[0] != "pbkdf2-sha256") return false;
    try {
      unsigned iterations = static_cast<unsigned>(std::stoul(parts[1]));
      auto salt = from_hex(parts[2]);
      auto got = crypto::pbkdf2_sha256(password, salt, iterations, 32);
      return crypto::digest_equal(crypto::to_hex(got), parts[3]);
    } catch (const std::exception&) {
      return false;
    }
  }
  return crypto::digest_equal(user.password, password);
}

}  // namespace clipportal::server
