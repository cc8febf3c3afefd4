#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clipportal/url.hpp"

namespace clipportal::html {

enum class NodeKind { document, element, text, comment, attribute };

/// A node of a parsed HTML tree.
///
/// Nodes are owned by their parent (children and attribute nodes alike), so
/// a node's address is its identity for as long as the owning Document lives.
/// Attributes are materialized as nodes of kind `attribute` so that path
/// expressions can select them; `name()` is the attribute name and `value()`
/// its value.
class Node {
 public:
  static std::unique_ptr<Node> make_document();
  static std::unique_ptr<Node> make_element(std::string name);
  static std::unique_ptr<Node> make_text(std::string text);
  static std::unique_ptr<Node> make_comment(std::string text);

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  NodeKind kind() const { return kind_; }
  bool is_element() const { return kind_ == NodeKind::element; }
  bool is_text() const { return kind_ == NodeKind::text; }

  const std::string& name() const { return name_; }
  /// Character data for text/comment nodes, value for attribute nodes.
  const std::string& value() const { return value_; }
  void set_value(std::string v) { value_ = std::move(v); }

  Node* parent() const { return parent_; }
  const std::vector<std::unique_ptr<Node>>& children() const { return children_; }
  const std::vector<std::unique_ptr<Node>>& attributes() const { return attributes_; }

  std::optional<std::string_view> attr(std::string_view name) const;
  const Node* attr_node(std::string_view name) const;
  /// Replaces an existing attribute's value in place or appends a new one.
  void set_attr(std::string_view name, std::string value);
  /// Adds the attribute only if absent (first occurrence wins).
  bool add_attr_if_absent(std::string_view name, std::string value);
  bool remove_attr(std::string_view name);

  /// Appends a child, merging it into a trailing text sibling when both are text.
  /// Returns the node that now holds the content.
  Node& append_child(std::unique_ptr<Node> child);
  std::unique_ptr<Node> remove_child(const Node& child);
  Node* last_child() const { return children_.empty() ? nullptr : children_.back().get(); }

  std::unique_ptr<Node> clone() const;

  /// Root of the tree this node belongs to.
  const Node& root() const;
  bool is_ancestor_of(const Node& other) const;

 private:
  Node(NodeKind kind, std::string name, std::string value)
      : kind_(kind), name_(std::move(name)), value_(std::move(value)) {}

  NodeKind kind_;
  std::string name_;
  std::string value_;
  Node* parent_ = nullptr;
  std::vector<std::unique_ptr<Node>> children_;
  std::vector<std::unique_ptr<Node>> attributes_;
};

class Document {
 public:
  Document(std::unique_ptr<Node> root, Url base_url, std::string encoding)
      : root_(std::move(root)), base_url_(std::move(base_url)), encoding_(std::move(encoding)) {}

  Node& root() { return *root_; }
  const Node& root() const { return *root_; }
  const Url& base_url() const { return base_url_; }
  const std::string& encoding() const { return encoding_; }

  const Node* html() const;
  const Node* head() const;
  const Node* body() const;

 private:
  std::unique_ptr<Node> root_;
  Url base_url_;
  std::string encoding_;
};

/// Parses arbitrary bytes as HTML. Never fails on malformed markup; the only
/// error is an invalid (non-absolute) base URL, reported as InvalidUrl.
Document parse_html(std::string_view bytes, const Url& base_url);
Document parse_html(std::string_view bytes, std::string_view base_url);

/// Parses a fragment of already-decoded UTF-8 markup under a synthetic
/// document node, without synthesizing html/head/body.
std::unique_ptr<Node> parse_fragment(std::string_view utf8);

/// Serializes a node (for document/fragment roots: their children) as HTML.
std::string serialize(const Node& node);
/// Serializes only the children of a node.
std::string serialize_children(const Node& node);

/// Concatenated descendant text in document order. Attribute nodes yield their value.
std::string text_content(const Node& node);

/// Normalized one-node-per-line dump, indented two spaces per depth.
std::string dump_tree(const Node& node);

bool is_void_element(std::string_view name);
bool is_raw_text_element(std::string_view name);

/// Label of the charset declared by a <meta> in the first 1024 bytes, if any.
std::optional<std::string> sniff_meta_charset(std::string_view bytes);

/// Decodes bytes to UTF-8 using `label` (utf-8, iso-8859-1, windows-1252,
/// us-ascii); unknown labels fall back to UTF-8. Invalid sequences become U+FFFD.
std::string decode_to_utf8(std::string_view bytes, std::string_view label);

}  // namespace clipportal::html
