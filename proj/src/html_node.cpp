#include <algorithm>
#include <unordered_set>

#include "clipportal/html_tree.hpp"

namespace clipportal::html {

std::unique_ptr<Node> Node::make_document() {
  return std::unique_ptr<Node>(new Node(NodeKind::document, "#document", ""));
}

std::unique_ptr<Node> Node::make_element(std::string name) {
  return std::unique_ptr<Node>(new Node(NodeKind::element, std::move(name), ""));
}

std::unique_ptr<Node> Node::make_text(std::string text) {
  return std::unique_ptr<Node>(new Node(NodeKind::text, "", std::move(text)));
}

std::unique_ptr<Node> Node::make_comment(std::string text) {
  return std::unique_ptr<Node>(new Node(NodeKind::comment, "", std::move(text)));
}

const Node* Node::attr_node(std::string_view name) const {
  for (const auto& a : attributes_) {
    if (a->name_ == name) return a.get();
  }
  return nullptr;
}

std::optional<std::string_view> Node::attr(std::string_view name) const {
  if (const Node* a = attr_node(name)) return std::string_view(a->value_);
  return std::nullopt;
}

void Node::set_attr(std::string_view name, std::string value) {
  for (auto& a : attributes_) {
    if (a->name_ == name) {
      a->value_ = std::move(value);
      return;
    }
  }
  auto node = std::unique_ptr<Node>(new Node(NodeKind::attribute, std::string(name), std::move(value)));
  node->parent_ = this;
  attributes_.push_back(std::move(node));
}

bool Node::add_attr_if_absent(std::string_view name, std::string value) {
  if (attr_node(name)) return false;
  set_attr(name, std::move(value));
  return true;
}

bool Node::remove_attr(std::string_view name) {
  auto it = std::find_if(attributes_.begin(), attributes_.end(),
                         [&](const auto& a) { return a->name_ == name; });
  if (it == attributes_.end()) return false;
  attributes_.erase(it);
  return true;
}

Node& Node::append_child(std::unique_ptr<Node> child) {
  if (child->kind_ == NodeKind::text && !children_.empty() &&
      children_.back()->kind_ == NodeKind::text) {
    children_.back()->value_ += child->value_;
    return *children_.back();
  }
  if (child->kind_ == NodeKind::text && child->value_.empty()) {
    // Empty text nodes carry nothing; keep the tree free of them.
    return *this;
  }
  child->parent_ = this;
  children_.push_back(std::move(child));
  return *children_.back();
}

std::unique_ptr<Node> Node::remove_child(const Node& child) {
  auto it = std::find_if(children_.begin(), children_.end(),
                         [&](const auto& c) { return c.get() == &child; });
  if (it == children_.end()) return nullptr;
  auto pos = static_cast<std::size_t>(it - children_.begin());
  std::unique_ptr<Node> out = std::move(*it);
  children_.erase(it);
  out->parent_ = nullptr;
  // Removing an element may leave two text nodes side by side.
  if (pos > 0 && pos < children_.size() && children_[pos - 1]->kind_ == NodeKind::text &&
      children_[pos]->kind_ == NodeKind::text) {
    children_[pos - 1]->value_ += children_[pos]->value_;
    children_.erase(children_.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  return out;
}

std::unique_ptr<Node> Node::clone() const {
  auto copy = std::unique_ptr<Node>(new Node(kind_, name_, value_));
  for (const auto& a : attributes_) copy->set_attr(a->name_, a->value_);
  for (const auto& c : children_) copy->append_child(c->clone());
  return copy;
}

const Node& Node::root() const {
  const Node* n = this;
  while (n->parent_) n = n->parent_;
  return *n;
}

bool Node::is_ancestor_of(const Node& other) const {
  for (const Node* p = other.parent_; p; p = p->parent_) {
    if (p == this) return true;
  }
  return false;
}

namespace {

const Node* find_child(const Node* parent, std::string_view name) {
  if (!parent) return nullptr;
  for (const auto& c : parent->children()) {
    if (c->is_element() && c->name() == name) return c.get();
  }
  return nullptr;
}

void escape_text(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
}

void escape_attr(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
}

void serialize_into(std::string& out, const Node& n) {
  switch (n.kind()) {
    case NodeKind::document:
      for (const auto& c : n.children()) serialize_into(out, *c);
      break;
    case NodeKind::text:
      if (n.parent() && n.parent()->is_element() && is_raw_text_element(n.parent()->name()) &&
          n.parent()->name() != "textarea" && n.parent()->name() != "title") {
        out += n.value();
      } else {
        escape_text(out, n.value());
      }
      break;
    case NodeKind::comment:
      out += "<!--";
      out += n.value();
      out += "-->";
      break;
    case NodeKind::attribute:
      out += n.name();
      out += "=\"";
      escape_attr(out, n.value());
      out += '"';
      break;
    case NodeKind::element:
      out += '<';
      out += n.name();
      for (const auto& a : n.attributes()) {
        out += ' ';
        serialize_into(out, *a);
      }
      out += '>';
      if (is_void_element(n.name())) break;
      if ((n.name() == "pre" || n.name() == "listing" || n.name() == "textarea") && !n.children().empty() &&
          n.children().front()->is_text() && n.children().front()->value().starts_with('\n')) {
        out += '\n';
      }
      for (const auto& c : n.children()) serialize_into(out, *c);
      out += "</";
      out += n.name();
      out += '>';
      break;
  }
}

void quote_into(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  out += '"';
}

void dump_into(std::string& out, const Node& n, int depth) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  switch (n.kind()) {
    case NodeKind::document: out += "#document"; break;
    case NodeKind::text: quote_into(out, n.value()); break;
    case NodeKind::comment:
      out += "<!-- ";
      quote_into(out, n.value());
      out += " -->";
      break;
    case NodeKind::attribute:
      out += '@' + n.name() + '=';
      quote_into(out, n.value());
      break;
    case NodeKind::element:
      out += '<' + n.name();
      for (const auto& a : n.attributes()) {
        out += ' ' + a->name() + '=';
        quote_into(out, a->value());
      }
      out += '>';
      break;
  }
  out += '\n';
  for (const auto& c : n.children()) dump_into(out, *c, depth + 1);
}

void text_into(std::string& out, const Node& n) {
  if (n.kind() == NodeKind::text || n.kind() == NodeKind::attribute) {
    out += n.value();
    return;
  }
  for (const auto& c : n.children()) text_into(out, *c);
}

}  // namespace

const Node* Document::html() const { return find_child(root_.get(), "html"); }
const Node* Document::head() const { return find_child(html(), "head"); }
const Node* Document::body() const { return find_child(html(), "body"); }

bool is_void_element(std::string_view name) {
  static const std::unordered_set<std::string_view> voids = {
      "area", "base", "br", "col", "embed", "hr", "img", "input", "keygen",
      "link", "meta", "param", "source", "track", "wbr"};
  return voids.contains(name);
}

bool is_raw_text_element(std::string_view name) {
  return name == "script" || name == "style" || name == "textarea" || name == "title" ||
         name == "xmp" || name == "plaintext";
}

std::string serialize(const Node& node) {
  std::string out;
  serialize_into(out, node);
  return out;
}

std::string serialize_children(const Node& node) {
  std::string out;
  for (const auto& c : node.children()) serialize_into(out, *c);
  return out;
}

std::string text_content(const Node& node) {
  std::string out;
  text_into(out, node);
  return out;
}

std::string dump_tree(const Node& node) {
  std::string out;
  dump_into(out, node, 0);
  return out;
}

}  // namespace clipportal::html
