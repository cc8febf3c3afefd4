#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clipportal/portal_model.hpp"

namespace clipportal::model {

namespace {

constexpr char kMagic[4] = {'C', 'D', 'V', '1'};
constexpr std::size_t kSaltSize = 16;
constexpr std::size_t kHeaderSize = sizeof(kMagic) + kSaltSize + crypto::kGcmNonceSize;

crypto::Bytes derive_key(std::string_view passphrase, std::span<const std::uint8_t> salt) {
  return crypto::pbkdf2_sha256(passphrase, salt, Vault::kKdfIterations, 32);
}

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string encode_entries(const std::map<std::string, CredentialEntry>& entries) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, e] : entries) j[id] = nlohmann::json::parse(credential_to_json(e));
  return j.dump();
}

std::map<std::string, CredentialEntry> decode_entries(std::string_view text) {
  std::map<std::string, CredentialEntry> out;
  auto j = nlohmann::json::parse(text);
  for (const auto& [id, e] : j.items()) out.emplace(id, credential_from_json(e.dump()));
  return out;
}

std::string seal_with(const std::map<std::string, CredentialEntry>& entries, std::span<const std::uint8_t> salt,
                      std::span<const std::uint8_t> key) {
  crypto::Bytes nonce = crypto::random_bytes(crypto::kGcmNonceSize);
  std::string header(kMagic, sizeof(kMagic));
  header.append(reinterpret_cast<const char*>(salt.data()), salt.size());
  header.append(reinterpret_cast<const char*>(nonce.data()), nonce.size());
  std::string plain = encode_entries(entries);
  crypto::Bytes sealed = crypto::aes256gcm_seal(key, nonce, as_bytes(header), as_bytes(plain));
  return header + std::string(sealed.begin(), sealed.end());
}

struct Opened {
  crypto::Bytes salt;
  crypto::Bytes key;
  std::map<std::string, CredentialEntry> entries;
};

Opened open_with(std::string_view image, std::string_view passphrase) {
  if (image.size() < kHeaderSize + crypto::kGcmTagSize || std::memcmp(image.data(), kMagic, sizeof(kMagic)) != 0) {
    throw AuthError("vault: not a CDV1 image or truncated");
  }
  auto bytes = as_bytes(image);
  Opened o;
  o.salt.assign(bytes.begin() + sizeof(kMagic), bytes.begin() + sizeof(kMagic) + kSaltSize);
  auto nonce = bytes.subspan(sizeof(kMagic) + kSaltSize, crypto::kGcmNonceSize);
  o.key = derive_key(passphrase, o.salt);
  crypto::Bytes plain;
  try {
    plain = crypto::aes256gcm_open(o.key, nonce, bytes.first(kHeaderSize), bytes.subspan(kHeaderSize));
  } catch (const crypto::CryptoError&) {
    throw AuthError("vault: wrong passphrase or tampered data");
  }
  try {
    o.entries = decode_entries(std::string_view(reinterpret_cast<const char*>(plain.data()), plain.size()));
  } catch (const std::exception&) {
    throw AuthError("vault: authenticated payload is not a credential map");
  }
  return o;
}

}  // namespace

Vault::Vault(std::filesystem::path path, std::string_view passphrase) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    Opened o = open_with(ss.str(), passphrase);
    salt_ = std::move(o.salt);
    key_ = std::move(o.key);
    entries_ = std::move(o.entries);
  } else {
    salt_ = crypto::random_bytes(kSaltSize);
    key_ = derive_key(passphrase, salt_);
    persist();
  }
}

void Vault::persist() {
  std::string image = seal_with(entries_, salt_, key_);
  auto tmp = path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(image.data(), static_cast<std::streamsize>(image.size()));
    if (!out) throw std::runtime_error("vault: cannot write " + tmp.string());
  }
  std::filesystem::permissions(tmp, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
  std::filesystem::rename(tmp, path_);
}

void Vault::put(const CredentialEntry& entry) {
  std::lock_guard lock(mutex_);
  entries_[entry.service_id] = entry;
  persist();
}

CredentialEntry Vault::get(std::string_view service_id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(std::string(service_id));
  if (it == entries_.end()) throw NotFound("credential " + std::string(service_id));
  return it->second;
}

bool Vault::contains(std::string_view service_id) const {
  std::lock_guard lock(mutex_);
  return entries_.contains(std::string(service_id));
}

bool Vault::erase(std::string_view service_id) {
  std::lock_guard lock(mutex_);
  if (entries_.erase(std::string(service_id)) == 0) return false;
  persist();
  return true;
}

std::vector<std::string> Vault::services() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

std::map<std::string, CredentialEntry> Vault::open_image(std::string_view image, std::string_view passphrase) {
  return open_with(image, passphrase).entries;
}

std::string Vault::seal_image(const std::map<std::string, CredentialEntry>& entries, std::string_view passphrase) {
  crypto::Bytes salt = crypto::random_bytes(kSaltSize);
  return seal_with(entries, salt, derive_key(passphrase, salt));
}

}  // namespace clipportal::model
