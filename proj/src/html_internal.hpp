#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clipportal::html {

void append_utf8(std::string& out, std::uint32_t code_point);
std::uint32_t cp1252_to_code_point(unsigned char b);
/// Canonical encoding label for raw bytes: BOM, then <meta charset>, then utf-8.
std::string detect_encoding(std::string_view bytes);

/// Decodes character references. `in_attribute` applies the legacy rule that
/// an unterminated named reference followed by an alphanumeric or '=' stays literal.
std::string decode_char_refs(std::string_view text, bool in_attribute);

struct Token {
  enum class Type { start_tag, end_tag, text, comment };
  Type type;
  std::string name;  // tag name, lowercase
  std::string data;  // text or comment data
  std::vector<std::pair<std::string, std::string>> attributes;
  bool self_closing = false;
};

/// Tag-soup tokenizer over decoded UTF-8. Switches itself into raw-text
/// mode after script/style/xmp (raw) and textarea/title (character
/// references decoded) start tags; <plaintext> swallows the rest of the input.
class Tokenizer {
 public:
  explicit Tokenizer(std::string_view input) : in_(input) {}
  std::optional<Token> next();

 private:
  std::optional<Token> tag_open();
  std::optional<Token> raw_text();
  void read_attributes(Token& tok, bool& terminated);
  Token make_text(std::size_t from, std::size_t to);

  std::string_view in_;
  std::size_t pos_ = 0;
  std::string raw_tag_;
  bool raw_decode_ = false;
};

}  // namespace clipportal::html
