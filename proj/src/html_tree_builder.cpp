// Deterministic tag-soup tree construction. The rule table is documented in
// docs/tree-construction.md; keep the two in sync.

#include <algorithm>
#include <initializer_list>
#include <unordered_set>
#include <utility>

#include "clipportal/html_tree.hpp"
#include "html_internal.hpp"

namespace clipportal::html {

namespace {

using NameSet = std::unordered_set<std::string_view>;

bool in(const NameSet& set, std::string_view name) { return set.contains(name); }

// Elements that stop upward searches for an open element.
const NameSet kScopeBoundary = {"html", "body", "table", "td", "th", "caption", "object",
                                "applet", "marquee", "button", "template"};

const NameSet kClosesParagraph = {
    "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir",
    "div", "dl", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
    "h4", "h5", "h6", "header", "hgroup", "hr", "main", "menu", "nav", "ol", "p", "pre",
    "section", "summary", "table", "ul", "li", "dd", "dt", "listing", "plaintext", "xmp"};

const NameSet kHeadings = {"h1", "h2", "h3", "h4", "h5", "h6"};
const NameSet kHeadContent = {"title", "meta", "link", "base", "style", "script", "noscript"};
const NameSet kTableSections = {"tbody", "thead", "tfoot"};
const NameSet kTableEndTags = {"table", "tbody", "thead", "tfoot", "tr", "td", "th", "caption"};

bool is_whitespace_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
  });
}

std::string_view strip_leading_ws(std::string_view s) {
  while (!s.empty() && (s[0] == ' ' || s[0] == '\t' || s[0] == '\n' || s[0] == '\r' || s[0] == '\f')) {
    s.remove_prefix(1);
  }
  return s;
}

class TreeBuilder {
 public:
  TreeBuilder(Node& root, bool fragment) : root_(root), fragment_(fragment) {
    if (fragment_) stack_.push_back(&root_);
  }

  void process(Token& tok) {
    const bool drop_newline = std::exchange(drop_newline_, false);
    switch (tok.type) {
      case Token::Type::start_tag: {
        const bool leading_newline = tok.name == "pre" || tok.name == "listing" || tok.name == "textarea";
        start_tag(tok);
        drop_newline_ = leading_newline;
        break;
      }
      case Token::Type::end_tag: end_tag(tok.name); break;
      case Token::Type::text:
        if (drop_newline && tok.data.starts_with("\r\n")) tok.data.erase(0, 2);
        else if (drop_newline && (tok.data.starts_with('\n') || tok.data.starts_with('\r'))) tok.data.erase(0, 1);
        if (!tok.data.empty()) text(tok.data);
        break;
      case Token::Type::comment: current().append_child(Node::make_comment(std::move(tok.data))); break;
    }
  }

  void finish() {
    if (!fragment_) ensure_body();
  }

 private:
  Node& current() {
    if (stack_.empty()) return html_ ? *html_ : root_;
    return *stack_.back();
  }

  void ensure_html() {
    if (html_) return;
    html_ = &root_.append_child(Node::make_element("html"));
    stack_.insert(stack_.begin(), html_);
  }

  void pop_head() {
    auto it = std::find(stack_.begin(), stack_.end(), head_);
    if (head_ && it != stack_.end()) stack_.erase(it, stack_.end());
  }

  void ensure_body() {
    ensure_html();
    if (body_) return;
    pop_head();
    body_ = &html_->append_child(Node::make_element("body"));
    stack_.push_back(body_);
  }

  Node& insert(std::string name, std::vector<std::pair<std::string, std::string>>& attrs, bool push) {
    auto el = Node::make_element(std::move(name));
    for (auto& [k, v] : attrs) el->add_attr_if_absent(k, std::move(v));
    Node& placed = current().append_child(std::move(el));
    if (push) stack_.push_back(&placed);
    return placed;
  }

  // Index of the topmost open element named in `targets`, searching down
  // from the current node and giving up at any element in `stoppers`.
  std::optional<std::size_t> find_open(const NameSet& targets, const NameSet& stoppers) const {
    for (std::size_t i = stack_.size(); i-- > 0;) {
      const Node* n = stack_[i];
      if (n == &root_) return std::nullopt;
      if (in(targets, n->name())) return i;
      if (in(stoppers, n->name())) return std::nullopt;
    }
    return std::nullopt;
  }

  void pop_to(std::size_t index) { stack_.resize(index); }

  bool close_if_open(const NameSet& targets, const NameSet& stoppers) {
    if (auto i = find_open(targets, stoppers)) {
      pop_to(*i);
      return true;
    }
    return false;
  }

  void close_paragraph() { close_if_open({"p"}, kScopeBoundary); }

  bool current_is(std::initializer_list<std::string_view> names) const {
    if (stack_.empty() || stack_.back() == &root_) return false;
    return std::find(names.begin(), names.end(), stack_.back()->name()) != names.end();
  }

  void merge_attributes(Node& el, std::vector<std::pair<std::string, std::string>>& attrs) {
    for (auto& [k, v] : attrs) el.add_attr_if_absent(k, std::move(v));
  }

  void start_tag(Token& tok) {
    const std::string& name = tok.name;
    if (!fragment_) {
      if (name == "html") {
        ensure_html();
        merge_attributes(*html_, tok.attributes);
        return;
      }
      if (name == "head") {
        if (head_ || body_) return;
        ensure_html();
        head_ = &insert("head", tok.attributes, true);
        return;
      }
      if (name == "body") {
        if (body_) {
          merge_attributes(*body_, tok.attributes);
          return;
        }
        ensure_html();
        pop_head();
        body_ = &insert("body", tok.attributes, true);
        return;
      }
      if (!body_ && in(kHeadContent, name)) {
        ensure_html();
        if (!head_) {
          std::vector<std::pair<std::string, std::string>> none;
          head_ = &insert("head", none, true);
        } else if (std::find(stack_.begin(), stack_.end(), head_) == stack_.end()) {
          stack_.push_back(head_);
        }
        insert(name, tok.attributes, !is_void_element(name));
        return;
      }
      ensure_body();
    }

    if (in(kClosesParagraph, name)) close_paragraph();

    if (name == "li") {
      close_if_open({"li"}, {"ul", "ol", "menu", "html", "body", "table", "td", "th", "caption",
                             "object", "applet", "marquee", "button", "template"});
    } else if (name == "dd" || name == "dt") {
      close_if_open({"dd", "dt"}, {"dl", "html", "body", "table", "td", "th", "caption",
                                   "object", "applet", "marquee", "button", "template"});
    } else if (in(kHeadings, name)) {
      if (!stack_.empty() && in(kHeadings, stack_.back()->name())) stack_.pop_back();
    } else if (name == "option") {
      if (current_is({"option"})) stack_.pop_back();
    } else if (name == "optgroup") {
      if (current_is({"option"})) stack_.pop_back();
      if (current_is({"optgroup"})) stack_.pop_back();
    } else if (name == "a") {
      close_if_open({"a"}, kScopeBoundary);
    } else if (name == "button") {
      close_if_open({"button"}, {"html", "body", "table", "td", "th", "caption", "object",
                                 "applet", "marquee", "template"});
    } else if (name == "form") {
      if (find_open({"form"}, {"html"})) return;  // nested forms are ignored
    } else if (name == "tr") {
      close_if_open({"tr"}, {"table", "tbody", "thead", "tfoot", "html"});
      if (current_is({"table"})) implied("tbody");
    } else if (name == "td" || name == "th") {
      close_if_open({"td", "th"}, {"tr", "table", "tbody", "thead", "tfoot", "html"});
      if (current_is({"table"})) implied("tbody");
      if (current_is({"tbody", "thead", "tfoot"})) implied("tr");
    } else if (in(kTableSections, name)) {
      close_if_open(kTableSections, {"table", "html"});
    }

    insert(name, tok.attributes, !is_void_element(name));
  }

  void implied(const char* name) {
    std::vector<std::pair<std::string, std::string>> none;
    insert(name, none, true);
  }

  void end_tag(const std::string& name) {
    if (!fragment_) {
      if (name == "html" || name == "body") return;
      if (name == "head") {
        pop_head();
        return;
      }
      if (!body_) {
        // Before body only head content can be open.
        if (auto i = find_open({name}, {"html"})) pop_to(*i);
        return;
      }
    }
    if (name == "br") {
      std::vector<std::pair<std::string, std::string>> none;
      insert("br", none, false);
      return;
    }
    if (is_void_element(name)) return;
    if (in(kTableEndTags, name)) {
      if (name == "table") {
        close_if_open({"table"}, {"html"});
      } else {
        close_if_open({name}, {"table", "html"});
      }
      return;
    }
    for (std::size_t i = stack_.size(); i-- > 0;) {
      const Node* n = stack_[i];
      if (n == &root_) return;
      if (n->name() == name) {
        pop_to(i);
        return;
      }
      if (in(kScopeBoundary, n->name())) return;
    }
  }

  void text(std::string& data) {
    if (!fragment_ && !body_) {
      if (is_whitespace_only(data)) {
        if (head_ && !stack_.empty() && stack_.back() == head_) {
          head_->append_child(Node::make_text(std::move(data)));
        } else if (!stack_.empty() && stack_.back() != html_ && stack_.back() != head_) {
          // inside head content such as <title>
          stack_.back()->append_child(Node::make_text(std::move(data)));
        }
        return;
      }
      if (!stack_.empty() && stack_.back() != html_ && stack_.back() != head_) {
        stack_.back()->append_child(Node::make_text(std::move(data)));
        return;
      }
      std::string rest(strip_leading_ws(data));
      ensure_body();
      current().append_child(Node::make_text(std::move(rest)));
      return;
    }
    current().append_child(Node::make_text(std::move(data)));
  }

  Node& root_;
  bool fragment_;
  bool drop_newline_ = false;
  Node* html_ = nullptr;
  Node* head_ = nullptr;
  Node* body_ = nullptr;
  std::vector<Node*> stack_;
};

std::string normalize_newlines(std::string s) {
  if (s.find('\r') == std::string::npos) return s;
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      out += '\n';
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

void build(Node& root, std::string_view utf8, bool fragment) {
  TreeBuilder builder(root, fragment);
  Tokenizer tokenizer(utf8);
  while (auto tok = tokenizer.next()) builder.process(*tok);
  builder.finish();
}

}  // namespace

Document parse_html(std::string_view bytes, const Url& base_url) {
  std::string encoding = detect_encoding(bytes);
  std::string text = normalize_newlines(decode_to_utf8(bytes, encoding));
  auto root = Node::make_document();
  build(*root, text, false);
  return Document(std::move(root), base_url, std::move(encoding));
}

Document parse_html(std::string_view bytes, std::string_view base_url) {
  return parse_html(bytes, Url::parse_or_throw(base_url));
}

std::unique_ptr<Node> parse_fragment(std::string_view utf8) {
  auto root = Node::make_document();
  build(*root, normalize_newlines(decode_to_utf8(utf8, "utf-8")), true);
  return root;
}

}  // namespace clipportal::html
