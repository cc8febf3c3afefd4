#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "clipportal/html_tree.hpp"

namespace clipportal::xpath {

// Grammar (abbreviated location paths only):
//
//   path      := '/' [relative] | '//' relative | relative
//   relative  := step (('/' | '//') step)*
//   step      := '.' | '..' | '@' (name | '*') | test predicate*
//   test      := name | '*' | 'text()' | 'node()'
//   predicate := '[' (number | or_expr) ']'
//   or_expr   := and_expr ('or' and_expr)*
//   and_expr  := primary ('and' primary)*
//   primary   := '@' name ['=' literal]
//              | 'contains' '(' ('@' name | 'text()') ',' literal ')'
//              | '(' or_expr ')'
//
// A number is only accepted as a whole predicate and means position() = n.

enum class Axis { child, descendant_or_self, self, parent, attribute };

struct NodeTest {
  enum class Kind { name, wildcard, text, node };
  Kind kind = Kind::node;
  std::string name;  // lowercase local name, for Kind::name

  bool operator==(const NodeTest&) const = default;
};

struct Predicate {
  enum class Kind { position, attr_equals, attr_present, contains, conjunction, disjunction };
  Kind kind = Kind::position;
  std::size_t index = 0;        // position, 1-based
  std::string attribute;        // attribute name; empty means text() for contains
  std::string literal;
  std::vector<Predicate> operands;  // conjunction / disjunction

  bool operator==(const Predicate&) const = default;
};

struct Step {
  Axis axis = Axis::child;
  NodeTest test;
  std::vector<Predicate> predicates;

  bool operator==(const Step&) const = default;
};

/// A compiled location path. Immutable after compile(); safe to share.
struct XPathExpr {
  bool absolute = false;
  std::vector<Step> steps;

  bool operator==(const XPathExpr&) const = default;
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected, std::string_view source);

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

XPathExpr compile(std::string_view source);

/// Canonical text form; compile(render(e)) == e.
std::string render(const XPathExpr& expr);

using NodeSet = std::vector<const html::Node*>;

/// Evaluates `expr` with `context` as the context node. Absolute paths start
/// at the root of the context's tree. Result: unique nodes in document order.
NodeSet evaluate(const XPathExpr& expr, const html::Node& context);

}  // namespace clipportal::xpath
