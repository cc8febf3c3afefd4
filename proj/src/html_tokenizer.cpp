#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>

#include "html_internal.hpp"

namespace clipportal::html {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char ascii_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

bool istarts_with(std::string_view s, std::size_t at, std::string_view prefix) {
  if (at > s.size() || s.size() - at < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(s[at + i]) != prefix[i]) return false;
  }
  return true;
}

const std::unordered_map<std::string_view, std::uint32_t>& named_refs() {
  static const std::unordered_map<std::string_view, std::uint32_t> table = {
      {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''},
      {"nbsp", 0xA0}, {"copy", 0xA9}, {"reg", 0xAE}, {"trade", 0x2122},
      {"hellip", 0x2026}, {"mdash", 0x2014}, {"ndash", 0x2013}, {"laquo", 0xAB},
      {"raquo", 0xBB}, {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C},
      {"rdquo", 0x201D}, {"bull", 0x2022}, {"middot", 0xB7}, {"euro", 0x20AC},
      {"pound", 0xA3}, {"yen", 0xA5}, {"cent", 0xA2}, {"sect", 0xA7}, {"deg", 0xB0},
      {"plusmn", 0xB1}, {"times", 0xD7}, {"divide", 0xF7}, {"frac12", 0xBD},
      {"frac14", 0xBC}, {"frac34", 0xBE}, {"para", 0xB6}, {"iexcl", 0xA1},
      {"iquest", 0xBF}, {"shy", 0xAD}, {"acute", 0xB4}, {"uml", 0xA8},
      {"auml", 0xE4}, {"ouml", 0xF6}, {"uuml", 0xFC}, {"Auml", 0xC4}, {"Ouml", 0xD6},
      {"Uuml", 0xDC}, {"szlig", 0xDF}, {"eacute", 0xE9}, {"Eacute", 0xC9},
      {"egrave", 0xE8}, {"ecirc", 0xEA}, {"aacute", 0xE1}, {"agrave", 0xE0},
      {"acirc", 0xE2}, {"aring", 0xE5}, {"ccedil", 0xE7}, {"ntilde", 0xF1},
      {"iacute", 0xED}, {"oacute", 0xF3}, {"uacute", 0xFA}, {"ocirc", 0xF4},
      {"larr", 0x2190}, {"rarr", 0x2192}, {"uarr", 0x2191}, {"darr", 0x2193},
      {"thinsp", 0x2009}, {"ensp", 0x2002}, {"emsp", 0x2003}, {"zwj", 0x200D},
      {"zwnj", 0x200C}};
  return table;
}

// Named references browsers honor without a terminating semicolon.
bool legacy_unterminated(std::string_view name) {
  return name == "amp" || name == "lt" || name == "gt" || name == "quot" || name == "nbsp" ||
         name == "copy" || name == "reg";
}

std::uint32_t sanitize_numeric(std::uint64_t v) {
  if (v == 0 || v > 0x10FFFF || (v >= 0xD800 && v <= 0xDFFF)) return 0xFFFD;
  if (v >= 0x80 && v <= 0x9F) return cp1252_to_code_point(static_cast<unsigned char>(v));
  return static_cast<std::uint32_t>(v);
}

// Rewrites comment data so that it serializes back to the same comment.
void make_comment_safe(std::string& data) {
  for (std::size_t k; (k = data.find("--")) != std::string::npos;) data.replace(k, 2, "- -");
  if (data.ends_with('-')) data += ' ';
  if (data.starts_with('>') || data.starts_with("->")) data.insert(data.begin(), ' ');
}

}  // namespace

std::string decode_char_refs(std::string_view text, bool in_attribute) {
  if (text.find('&') == std::string_view::npos) return std::string(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c != '&') {
      out += c;
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (j < text.size() && text[j] == '#') {
      ++j;
      bool hex = j < text.size() && (text[j] == 'x' || text[j] == 'X');
      if (hex) ++j;
      std::size_t digits_start = j;
      std::uint64_t value = 0;
      while (j < text.size() && (hex ? std::isxdigit(static_cast<unsigned char>(text[j]))
                                     : std::isdigit(static_cast<unsigned char>(text[j])))) {
        int d = std::isdigit(static_cast<unsigned char>(text[j]))
                    ? text[j] - '0'
                    : ascii_lower(text[j]) - 'a' + 10;
        if (value <= 0x10FFFF) value = value * (hex ? 16 : 10) + static_cast<std::uint64_t>(d);
        ++j;
      }
      if (j == digits_start) {
        out += c;
        ++i;
        continue;
      }
      if (j < text.size() && text[j] == ';') ++j;
      append_utf8(out, sanitize_numeric(value));
      i = j;
      continue;
    }
    while (j < text.size() && is_alnum(text[j]) && j - i <= 32) ++j;
    std::string_view name = text.substr(i + 1, j - i - 1);
    bool terminated = j < text.size() && text[j] == ';';
    auto it = named_refs().find(name);
    if (it != named_refs().end() && (terminated || legacy_unterminated(name))) {
      bool next_blocks = !terminated && in_attribute && j < text.size() &&
                         (is_alnum(text[j]) || text[j] == '=');
      if (!next_blocks) {
        append_utf8(out, it->second);
        i = terminated ? j + 1 : j;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

Token Tokenizer::make_text(std::size_t from, std::size_t to) {
  Token t{Token::Type::text, {}, decode_char_refs(in_.substr(from, to - from), false), {}, false};
  // NUL never survives into the tree.
  std::string cleaned;
  if (t.data.find('\0') != std::string::npos) {
    for (char ch : t.data) {
      if (ch == '\0') {
        cleaned += "\xEF\xBF\xBD";
      } else {
        cleaned += ch;
      }
    }
    t.data = std::move(cleaned);
  }
  return t;
}

std::optional<Token> Tokenizer::next() {
  while (pos_ < in_.size()) {
    if (!raw_tag_.empty()) {
      if (auto t = raw_text()) return t;
      continue;
    }
    if (in_[pos_] == '<') {
      if (auto t = tag_open()) return t;
      continue;
    }
    std::size_t lt = in_.find('<', pos_);
    if (lt == std::string_view::npos) lt = in_.size();
    Token t = make_text(pos_, lt);
    pos_ = lt;
    return t;
  }
  return std::nullopt;
}

std::optional<Token> Tokenizer::raw_text() {
  std::size_t search = pos_;
  std::size_t end = in_.size();
  while (search < in_.size()) {
    std::size_t lt = in_.find("</", search);
    if (lt == std::string_view::npos) break;
    std::size_t after = lt + 2 + raw_tag_.size();
    if (istarts_with(in_, lt + 2, raw_tag_) &&
        (after >= in_.size() || is_ws(in_[after]) || in_[after] == '/' || in_[after] == '>')) {
      end = lt;
      break;
    }
    search = lt + 2;
  }
  std::optional<Token> out;
  if (end > pos_) {
    std::string_view body = in_.substr(pos_, end - pos_);
    out = Token{Token::Type::text, {},
                raw_decode_ ? decode_char_refs(body, false) : std::string(body), {}, false};
  }
  pos_ = end;
  raw_tag_.clear();
  return out;
}

void Tokenizer::read_attributes(Token& tok, bool& terminated) {
  terminated = false;
  while (pos_ < in_.size()) {
    char c = in_[pos_];
    if (is_ws(c)) {
      ++pos_;
      continue;
    }
    if (c == '>') {
      ++pos_;
      terminated = true;
      return;
    }
    if (c == '/') {
      ++pos_;
      if (pos_ < in_.size() && in_[pos_] == '>') {
        tok.self_closing = true;
        ++pos_;
        terminated = true;
        return;
      }
      continue;
    }
    std::size_t name_start = pos_;
    ++pos_;  // the first character may be '='
    while (pos_ < in_.size() && !is_ws(in_[pos_]) && in_[pos_] != '/' && in_[pos_] != '>' &&
           in_[pos_] != '=') {
      ++pos_;
    }
    std::string name = lower(in_.substr(name_start, pos_ - name_start));
    while (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
    std::string value;
    if (pos_ < in_.size() && in_[pos_] == '=') {
      ++pos_;
      while (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
      if (pos_ < in_.size() && (in_[pos_] == '"' || in_[pos_] == '\'')) {
        char q = in_[pos_++];
        std::size_t close = in_.find(q, pos_);
        if (close == std::string_view::npos) {
          pos_ = in_.size();
          return;
        }
        value = decode_char_refs(in_.substr(pos_, close - pos_), true);
        pos_ = close + 1;
      } else {
        std::size_t vstart = pos_;
        while (pos_ < in_.size() && !is_ws(in_[pos_]) && in_[pos_] != '>') ++pos_;
        value = decode_char_refs(in_.substr(vstart, pos_ - vstart), true);
      }
    }
    // Names that cannot be written back as HTML attributes are dropped.
    static constexpr std::string_view kBadNameChars("\"'<=`\0", 6);
    bool valid = !name.empty() && name.find_first_of(kBadNameChars) == std::string::npos;
    if (valid) {
      bool dup = std::any_of(tok.attributes.begin(), tok.attributes.end(),
                             [&](const auto& a) { return a.first == name; });
      if (!dup) tok.attributes.emplace_back(std::move(name), std::move(value));
    }
  }
}

std::optional<Token> Tokenizer::tag_open() {
  const std::size_t start = pos_;
  auto rest = [&](std::size_t at) { return in_.substr(at); };

  if (rest(start).starts_with("<!--")) {
    std::size_t body = start + 4;
    if (body < in_.size() && in_[body] == '>') {
      pos_ = body + 1;
      return Token{Token::Type::comment, {}, {}, {}, false};
    }
    if (rest(body).starts_with("->")) {
      pos_ = body + 2;
      return Token{Token::Type::comment, {}, {}, {}, false};
    }
    std::size_t close = in_.find("-->", body);
    std::string data(in_.substr(body, close == std::string_view::npos ? std::string_view::npos : close - body));
    pos_ = close == std::string_view::npos ? in_.size() : close + 3;
    // "--" cannot be written back inside a comment.
    make_comment_safe(data);
    return Token{Token::Type::comment, {}, std::move(data), {}, false};
  }
  if (start + 1 < in_.size() && (in_[start + 1] == '!' || in_[start + 1] == '?')) {
    bool doctype = istarts_with(in_, start + 2, "doctype");
    std::size_t close = in_.find('>', start + 2);
    std::string data(in_.substr(start + 2, close == std::string_view::npos ? std::string_view::npos : close - start - 2));
    pos_ = close == std::string_view::npos ? in_.size() : close + 1;
    if (doctype) return std::nullopt;
    if (in_[start + 1] == '?') data.insert(data.begin(), '?');
    make_comment_safe(data);
    return Token{Token::Type::comment, {}, std::move(data), {}, false};
  }
  if (start + 1 < in_.size() && in_[start + 1] == '/') {
    std::size_t name_start = start + 2;
    if (name_start < in_.size() && in_[name_start] == '>') {
      pos_ = name_start + 1;
      return std::nullopt;
    }
    if (name_start >= in_.size()) {
      pos_ = in_.size();
      return Token{Token::Type::text, {}, "</", {}, false};
    }
    if (!is_alpha(in_[name_start])) {
      std::size_t close = in_.find('>', name_start);
      std::string data(in_.substr(name_start, close == std::string_view::npos ? std::string_view::npos : close - name_start));
      pos_ = close == std::string_view::npos ? in_.size() : close + 1;
      make_comment_safe(data);
      return Token{Token::Type::comment, {}, std::move(data), {}, false};
    }
    pos_ = name_start;
    while (pos_ < in_.size() && !is_ws(in_[pos_]) && in_[pos_] != '/' && in_[pos_] != '>') ++pos_;
    Token tok{Token::Type::end_tag, lower(in_.substr(name_start, pos_ - name_start)), {}, {}, false};
    bool terminated = false;
    read_attributes(tok, terminated);
    if (!terminated) return std::nullopt;  // EOF inside a tag drops the tag
    tok.attributes.clear();
    tok.self_closing = false;
    return tok;
  }
  if (start + 1 < in_.size() && is_alpha(in_[start + 1])) {
    std::size_t name_start = start + 1;
    pos_ = name_start;
    while (pos_ < in_.size() && !is_ws(in_[pos_]) && in_[pos_] != '/' && in_[pos_] != '>') ++pos_;
    Token tok{Token::Type::start_tag, lower(in_.substr(name_start, pos_ - name_start)), {}, {}, false};
    bool terminated = false;
    read_attributes(tok, terminated);
    if (!terminated) return std::nullopt;
    if (tok.name == "script" || tok.name == "style" || tok.name == "xmp" || tok.name == "plaintext") {
      raw_tag_ = tok.name;
      raw_decode_ = false;
    } else if (tok.name == "textarea" || tok.name == "title") {
      raw_tag_ = tok.name;
      raw_decode_ = true;
    }
    return tok;
  }
  // A lone '<' is text.
  std::size_t lt = in_.find('<', start + 1);
  if (lt == std::string_view::npos) lt = in_.size();
  Token t = make_text(start, lt);
  pos_ = lt;
  return t;
}

}  // namespace clipportal::html
