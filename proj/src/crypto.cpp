#include "clipportal/crypto.hpp"

#include <openssl/bio.h>
#include <openssl/bn.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <cctype>
#include <memory>
#include <utility>

namespace clipportal::crypto {

namespace {

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, Deleter<EVP_CIPHER_CTX, EVP_CIPHER_CTX_free>>;
using PKey = std::unique_ptr<EVP_PKEY, Deleter<EVP_PKEY, EVP_PKEY_free>>;
using X509Ptr = std::unique_ptr<X509, Deleter<X509, X509_free>>;
using BioPtr = std::unique_ptr<BIO, Deleter<BIO, BIO_free_all>>;

void check(int ok, const char* what) {
  if (ok != 1) throw CryptoError(what);
}

std::string bio_to_string(BIO* bio) {
  char* data = nullptr;
  long len = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(len));
}

std::string der_fingerprint(X509* cert) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  check(X509_digest(cert, EVP_sha256(), md, &len), "X509_digest");
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    if (i) out += ':';
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out += hex[b >> 4];
    out += hex[b & 0xF];
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  check(EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr), "EVP_Digest");
  return to_hex(std::span<const std::uint8_t>(md, len));
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  check(RAND_bytes(out.data(), static_cast<int>(n)), "RAND_bytes");
  return out;
}

std::string random_token() { return to_hex(random_bytes(16)); }

Bytes pbkdf2_sha256(std::string_view passphrase, std::span<const std::uint8_t> salt,
                    unsigned iterations, std::size_t key_length) {
  Bytes key(key_length);
  check(PKCS5_PBKDF2_HMAC(passphrase.data(), static_cast<int>(passphrase.size()), salt.data(),
                          static_cast<int>(salt.size()), static_cast<int>(iterations), EVP_sha256(),
                          static_cast<int>(key_length), key.data()),
        "PKCS5_PBKDF2_HMAC");
  return key;
}

Bytes aes256gcm_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                     std::span<const std::uint8_t> aad, std::span<const std::uint8_t> plaintext) {
  if (key.size() != 32 || nonce.size() != kGcmNonceSize) throw CryptoError("bad key or nonce size");
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()),
        "EncryptInit");
  int len = 0;
  if (!aad.empty()) {
    check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())), "aad");
  }
  Bytes out(plaintext.size() + kGcmTagSize);
  check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())),
        "EncryptUpdate");
  int total = len;
  check(EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len), "EncryptFinal");
  total += len;
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kGcmTagSize),
                            out.data() + total),
        "GET_TAG");
  out.resize(static_cast<std::size_t>(total) + kGcmTagSize);
  return out;
}

Bytes aes256gcm_open(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
                     std::span<const std::uint8_t> aad, std::span<const std::uint8_t> sealed) {
  if (key.size() != 32 || nonce.size() != kGcmNonceSize) throw CryptoError("bad key or nonce size");
  if (sealed.size() < kGcmTagSize) throw AuthFailure();
  const std::size_t body = sealed.size() - kGcmTagSize;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()),
        "DecryptInit");
  int len = 0;
  if (!aad.empty()) {
    check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())), "aad");
  }
  Bytes out(body);
  check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(body)),
        "DecryptUpdate");
  int total = len;
  Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(body), sealed.end());
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kGcmTagSize), tag.data()),
        "SET_TAG");
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + total, &len) != 1) {
    OPENSSL_cleanse(out.data(), out.size());
    throw AuthFailure();
  }
  out.resize(static_cast<std::size_t>(total + len));
  return out;
}

bool digest_equal(std::string_view a, std::string_view b) {
  unsigned char da[32];
  unsigned char db[32];
  unsigned int len = 0;
  check(EVP_Digest(a.data(), a.size(), da, &len, EVP_sha256(), nullptr), "EVP_Digest");
  check(EVP_Digest(b.data(), b.size(), db, &len, EVP_sha256(), nullptr), "EVP_Digest");
  return CRYPTO_memcmp(da, db, sizeof da) == 0;
}

SelfSignedCert make_self_signed_cert(const std::vector<std::string>& extra_hosts) {
  PKey key(EVP_EC_gen("P-256"));
  if (!key) throw CryptoError("EVP_EC_gen");
  X509Ptr cert(X509_new());
  check(X509_set_version(cert.get(), 2), "X509_set_version");
  Bytes serial = random_bytes(8);
  serial[0] &= 0x7F;
  BIGNUM* bn = BN_bin2bn(serial.data(), static_cast<int>(serial.size()), nullptr);
  BN_to_ASN1_INTEGER(bn, X509_get_serialNumber(cert.get()));
  BN_free(bn);
  X509_gmtime_adj(X509_getm_notBefore(cert.get()), -3600);
  X509_gmtime_adj(X509_getm_notAfter(cert.get()), 60L * 60 * 24 * 365);
  check(X509_set_pubkey(cert.get(), key.get()), "X509_set_pubkey");
  X509_NAME* name = X509_get_subject_name(cert.get());
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>("clipportal dev"), -1, -1, 0);
  check(X509_set_issuer_name(cert.get(), name), "X509_set_issuer_name");

  std::string san = "DNS:localhost,IP:127.0.0.1";
  for (const auto& h : extra_hosts) {
    bool ip = !h.empty() && (std::isdigit(static_cast<unsigned char>(h[0])) || h.find(':') != std::string::npos);
    san += (ip ? ",IP:" : ",DNS:") + h;
  }
  X509V3_CTX v3;
  X509V3_set_ctx_nodb(&v3);
  X509V3_set_ctx(&v3, cert.get(), cert.get(), nullptr, nullptr, 0);
  for (auto [nid, value] : {std::pair{NID_subject_alt_name, san},
                            std::pair{NID_basic_constraints, std::string("critical,CA:TRUE")}}) {
    X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &v3, nid, value.c_str());
    if (!ext) throw CryptoError("X509V3_EXT_conf_nid");
    X509_add_ext(cert.get(), ext, -1);
    X509_EXTENSION_free(ext);
  }
  if (X509_sign(cert.get(), key.get(), EVP_sha256()) <= 0) throw CryptoError("X509_sign");

  SelfSignedCert out;
  BioPtr cbio(BIO_new(BIO_s_mem()));
  check(PEM_write_bio_X509(cbio.get(), cert.get()), "PEM_write_bio_X509");
  out.cert_pem = bio_to_string(cbio.get());
  BioPtr kbio(BIO_new(BIO_s_mem()));
  check(PEM_write_bio_PrivateKey(kbio.get(), key.get(), nullptr, nullptr, 0, nullptr, nullptr),
        "PEM_write_bio_PrivateKey");
  out.key_pem = bio_to_string(kbio.get());
  out.fingerprint_sha256 = der_fingerprint(cert.get());
  return out;
}

std::string certificate_fingerprint(const std::string& cert_pem) {
  BioPtr bio(BIO_new_mem_buf(cert_pem.data(), static_cast<int>(cert_pem.size())));
  X509Ptr cert(PEM_read_bio_X509(bio.get(), nullptr, nullptr, nullptr));
  if (!cert) throw CryptoError("not a PEM certificate");
  return der_fingerprint(cert.get());
}

}  // namespace clipportal::crypto
