#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace clipportal::crypto {

using Bytes = std::vector<std::uint8_t>;

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Authentication tag mismatch on decryption.
class AuthFailure : public CryptoError {
 public:
  AuthFailure() : CryptoError("authentication failed") {}
};

std::string sha256_hex(std::string_view data);
std::string to_hex(std::span<const std::uint8_t> data);

Bytes random_bytes(std::size_t n);
/// 128-bit random token as 32 lowercase hex characters.
std::string random_token();

Bytes pbkdf2_sha256(std::string_view passphrase, std::span<const std::uint8_t> salt,
                    unsigned iterations, std::size_t key_length);

inline constexpr std::size_t kGcmNonceSize = 12;
inline constexpr std::size_t kGcmTagSize = 16;

/// AES-256-GCM. Returns ciphertext followed by the 16-byte tag.
Bytes aes256gcm_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                     std::span<const std::uint8_t> aad, std::span<const std::uint8_t> plaintext);

/// Inverse of aes256gcm_seal; throws AuthFailure without releasing plaintext.
Bytes aes256gcm_open(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                     std::span<const std::uint8_t> aad, std::span<const std::uint8_t> sealed);

/// Constant-time equality of the SHA-256 digests of two strings.
bool digest_equal(std::string_view a, std::string_view b);

struct SelfSignedCert {
  std::string cert_pem;
  std::string key_pem;
  std::string fingerprint_sha256;  // colon-separated uppercase hex of the DER
};

/// EC P-256 key and certificate valid for localhost and 127.0.0.1 (plus `extra_hosts`).
SelfSignedCert make_self_signed_cert(const std::vector<std::string>& extra_hosts = {});

std::string certificate_fingerprint(const std::string& cert_pem);

}  // namespace clipportal::crypto
