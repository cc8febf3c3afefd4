#include "clipportal/xpath.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

namespace clipportal::xpath {

using html::Node;
using html::NodeKind;

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) out += i + 1 == expected.size() ? " or " : ", ";
    out += expected[i];
  }
  return out;
}

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':';
}

std::string local_lower(std::string_view name) {
  if (auto colon = name.rfind(':'); colon != std::string_view::npos) name.remove_prefix(colon + 1);
  std::string out(name);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  XPathExpr parse() {
    XPathExpr expr;
    skip_ws();
    if (peek("//")) {
      expr.absolute = true;
      pos_ += 2;
      expr.steps.push_back(descendant_or_self());
      parse_relative(expr);
    } else if (peek("/")) {
      expr.absolute = true;
      ++pos_;
      skip_ws();
      if (at_step_start()) parse_relative(expr);
    } else {
      parse_relative(expr);
    }
    skip_ws();
    if (pos_ != src_.size()) fail({"'/'", "'//'", "'['", "end of expression"});
    return expr;
  }

 private:
  static Step descendant_or_self() {
    return Step{Axis::descendant_or_self, NodeTest{NodeTest::Kind::node, {}}, {}};
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(pos_, std::move(expected), src_);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool peek(std::string_view s) const { return src_.substr(pos_).starts_with(s); }

  bool at_step_start() const {
    if (pos_ >= src_.size()) return false;
    char c = src_[pos_];
    return c == '.' || c == '@' || c == '*' || is_name_start(c);
  }

  void expect(char c, const char* label) {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != c) fail({label});
    ++pos_;
  }

  std::string name() {
    if (pos_ >= src_.size() || !is_name_start(src_[pos_])) fail({"name"});
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_name_char(src_[pos_])) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  void parse_relative(XPathExpr& expr) {
    expr.steps.push_back(step());
    while (true) {
      skip_ws();
      if (peek("//")) {
        pos_ += 2;
        expr.steps.push_back(descendant_or_self());
      } else if (peek("/")) {
        ++pos_;
      } else {
        return;
      }
      skip_ws();
      expr.steps.push_back(step());
    }
  }

  Step step() {
    skip_ws();
    if (peek("..")) {
      pos_ += 2;
      return Step{Axis::parent, NodeTest{NodeTest::Kind::node, {}}, {}};
    }
    if (peek(".")) {
      ++pos_;
      return Step{Axis::self, NodeTest{NodeTest::Kind::node, {}}, {}};
    }
    Step s;
    if (peek("@")) {
      ++pos_;
      skip_ws();
      s.axis = Axis::attribute;
      if (peek("*")) {
        ++pos_;
        s.test.kind = NodeTest::Kind::wildcard;
      } else {
        if (pos_ >= src_.size() || !is_name_start(src_[pos_])) fail({"attribute name", "'*'"});
        s.test = {NodeTest::Kind::name, local_lower(name())};
      }
    } else if (peek("*")) {
      ++pos_;
      s.test.kind = NodeTest::Kind::wildcard;
    } else {
      if (pos_ >= src_.size() || !is_name_start(src_[pos_])) {
        fail({"name", "'*'", "'.'", "'..'", "'@'", "'text()'", "'node()'"});
      }
      std::size_t name_pos = pos_;
      std::string n = name();
      skip_ws();
      if (peek("(")) {
        if (n != "text" && n != "node") {
          pos_ = name_pos;
          fail({"'text()'", "'node()'", "name"});
        }
        ++pos_;
        expect(')', "')'");
        s.test.kind = n == "text" ? NodeTest::Kind::text : NodeTest::Kind::node;
      } else {
        s.test = {NodeTest::Kind::name, local_lower(n)};
      }
    }
    while (true) {
      skip_ws();
      if (!peek("[")) break;
      ++pos_;
      s.predicates.push_back(predicate());
    }
    return s;
  }

  Predicate predicate() {
    skip_ws();
    if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::size_t index = 0;
      auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, index);
      if (ec != std::errc{} || index < 1) {
        pos_ = start;
        fail({"position >= 1"});
      }
      expect(']', "']'");
      Predicate p;
      p.kind = Predicate::Kind::position;
      p.index = index;
      return p;
    }
    Predicate p = or_expr();
    expect(']', "']'");
    return p;
  }

  Predicate or_expr() {
    Predicate first = and_expr();
    std::vector<Predicate> operands;
    while (keyword("or")) {
      if (operands.empty()) operands.push_back(std::move(first));
      operands.push_back(and_expr());
    }
    if (operands.empty()) return first;
    Predicate p;
    p.kind = Predicate::Kind::disjunction;
    p.operands = std::move(operands);
    return p;
  }

  Predicate and_expr() {
    Predicate first = primary();
    std::vector<Predicate> operands;
    while (keyword("and")) {
      if (operands.empty()) operands.push_back(std::move(first));
      operands.push_back(primary());
    }
    if (operands.empty()) return first;
    Predicate p;
    p.kind = Predicate::Kind::conjunction;
    p.operands = std::move(operands);
    return p;
  }

  bool keyword(std::string_view kw) {
    skip_ws();
    if (!peek(kw)) return false;
    std::size_t after = pos_ + kw.size();
    if (after < src_.size() && is_name_char(src_[after])) return false;
    pos_ = after;
    return true;
  }

  std::string literal() {
    skip_ws();
    if (pos_ >= src_.size() || (src_[pos_] != '\'' && src_[pos_] != '"')) fail({"string literal"});
    char q = src_[pos_++];
    auto close = src_.find(q, pos_);
    if (close == std::string_view::npos) {
      pos_ = src_.size();
      fail({std::string("closing ") + q});
    }
    std::string out(src_.substr(pos_, close - pos_));
    pos_ = close + 1;
    return out;
  }

  Predicate primary() {
    skip_ws();
    Predicate p;
    if (peek("@")) {
      ++pos_;
      skip_ws();
      p.attribute = local_lower(name());
      skip_ws();
      if (peek("=")) {
        ++pos_;
        p.kind = Predicate::Kind::attr_equals;
        p.literal = literal();
      } else {
        p.kind = Predicate::Kind::attr_present;
      }
      return p;
    }
    if (peek("(")) {
      ++pos_;
      Predicate inner = or_expr();
      expect(')', "')'");
      return inner;
    }
    if (peek("contains")) {
      std::size_t kw_pos = pos_;
      pos_ += 8;
      skip_ws();
      if (!peek("(")) {
        pos_ = kw_pos;
        fail({"'@'", "'contains('", "'('"});
      }
      ++pos_;
      skip_ws();
      p.kind = Predicate::Kind::contains;
      if (peek("@")) {
        ++pos_;
        skip_ws();
        p.attribute = local_lower(name());
      } else if (peek("text")) {
        pos_ += 4;
        skip_ws();
        expect('(', "'('");
        expect(')', "')'");
      } else {
        fail({"'@'", "'text()'"});
      }
      expect(',', "','");
      p.literal = literal();
      expect(')', "')'");
      return p;
    }
    fail({"'@'", "'contains('", "'('"});
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  if (s.find('\'') == std::string::npos) return "'" + s + "'";
  return "\"" + s + "\"";
}

std::string render_predicate(const Predicate& p);

std::string render_predicate(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::position: return std::to_string(p.index);
    case Predicate::Kind::attr_present: return "@" + p.attribute;
    case Predicate::Kind::attr_equals: return "@" + p.attribute + "=" + quote(p.literal);
    case Predicate::Kind::contains:
      return "contains(" + (p.attribute.empty() ? std::string("text()") : "@" + p.attribute) +
             "," + quote(p.literal) + ")";
    case Predicate::Kind::conjunction:
    case Predicate::Kind::disjunction: {
      bool conj = p.kind == Predicate::Kind::conjunction;
      std::string out;
      for (std::size_t i = 0; i < p.operands.size(); ++i) {
        if (i) out += conj ? " and " : " or ";
        const Predicate& op = p.operands[i];
        // An or-operand that is itself an or-chain must keep its grouping.
        bool wrap = conj ? (op.kind == Predicate::Kind::conjunction ||
                            op.kind == Predicate::Kind::disjunction)
                         : op.kind == Predicate::Kind::disjunction;
        std::string inner = render_predicate(op);
        out += wrap ? "(" + inner + ")" : inner;
      }
      return out;
    }
  }
  return {};
}

std::string render_step(const Step& s) {
  std::string out;
  switch (s.axis) {
    case Axis::descendant_or_self: return "";
    case Axis::self: return ".";
    case Axis::parent: return "..";
    case Axis::attribute: out = "@"; break;
    case Axis::child: break;
  }
  switch (s.test.kind) {
    case NodeTest::Kind::name: out += s.test.name; break;
    case NodeTest::Kind::wildcard: out += "*"; break;
    case NodeTest::Kind::text: out += "text()"; break;
    case NodeTest::Kind::node: out += "node()"; break;
  }
  for (const auto& p : s.predicates) out += "[" + render_predicate(p) + "]";
  return out;
}

// ---- evaluation ----

bool test_matches(const Step& step, const Node& n) {
  const NodeKind principal = step.axis == Axis::attribute ? NodeKind::attribute : NodeKind::element;
  switch (step.test.kind) {
    case NodeTest::Kind::node: return true;
    case NodeTest::Kind::text: return n.kind() == NodeKind::text;
    case NodeTest::Kind::wildcard: return n.kind() == principal;
    case NodeTest::Kind::name: return n.kind() == principal && n.name() == step.test.name;
  }
  return false;
}

void collect_descendants_or_self(const Node& n, std::vector<const Node*>& out) {
  out.push_back(&n);
  for (const auto& c : n.children()) collect_descendants_or_self(*c, out);
}

std::vector<const Node*> axis_nodes(Axis axis, const Node& context) {
  std::vector<const Node*> out;
  switch (axis) {
    case Axis::child:
      for (const auto& c : context.children()) out.push_back(c.get());
      break;
    case Axis::descendant_or_self:
      collect_descendants_or_self(context, out);
      break;
    case Axis::self:
      out.push_back(&context);
      break;
    case Axis::parent:
      if (context.parent()) out.push_back(context.parent());
      break;
    case Axis::attribute:
      for (const auto& a : context.attributes()) out.push_back(a.get());
      break;
  }
  return out;
}

std::string_view first_text_child(const Node& n) {
  for (const auto& c : n.children()) {
    if (c->kind() == NodeKind::text) return c->value();
  }
  return {};
}

bool holds(const Predicate& p, const Node& n, std::size_t position) {
  switch (p.kind) {
    case Predicate::Kind::position: return position == p.index;
    case Predicate::Kind::attr_present: return n.attr(p.attribute).has_value();
    case Predicate::Kind::attr_equals: {
      auto v = n.attr(p.attribute);
      return v && *v == p.literal;
    }
    case Predicate::Kind::contains: {
      std::string_view haystack;
      if (p.attribute.empty()) {
        haystack = first_text_child(n);
      } else if (auto v = n.attr(p.attribute)) {
        haystack = *v;
      }
      return haystack.find(p.literal) != std::string_view::npos;
    }
    case Predicate::Kind::conjunction:
      return std::all_of(p.operands.begin(), p.operands.end(),
                         [&](const Predicate& op) { return holds(op, n, position); });
    case Predicate::Kind::disjunction:
      return std::any_of(p.operands.begin(), p.operands.end(),
                         [&](const Predicate& op) { return holds(op, n, position); });
  }
  return false;
}

void number_nodes(const Node& n, std::unordered_map<const Node*, std::size_t>& order) {
  order.emplace(&n, order.size());
  for (const auto& a : n.attributes()) order.emplace(a.get(), order.size());
  for (const auto& c : n.children()) number_nodes(*c, order);
}

}  // namespace

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected, std::string_view source)
    : std::runtime_error("XPath syntax error at offset " + std::to_string(offset) + " in '" +
                         std::string(source) + "': expected " + join_expected(expected)),
      offset_(offset),
      expected_(std::move(expected)) {}

XPathExpr compile(std::string_view source) { return Parser(source).parse(); }

std::string render(const XPathExpr& expr) {
  std::string out = expr.absolute ? "/" : "";
  for (std::size_t i = 0; i < expr.steps.size(); ++i) {
    if (i) out += "/";
    out += render_step(expr.steps[i]);
  }
  return out;
}

NodeSet evaluate(const XPathExpr& expr, const Node& context) {
  NodeSet current{expr.absolute ? &context.root() : &context};
  if (expr.steps.empty()) return current;

  std::unordered_map<const Node*, std::size_t> order;
  number_nodes(context.root(), order);

  for (const Step& step : expr.steps) {
    NodeSet next;
    std::unordered_set<const Node*> seen;
    for (const Node* ctx : current) {
      std::vector<const Node*> candidates;
      for (const Node* n : axis_nodes(step.axis, *ctx)) {
        if (test_matches(step, *n)) candidates.push_back(n);
      }
      for (const Predicate& p : step.predicates) {
        std::vector<const Node*> kept;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          if (holds(p, *candidates[i], i + 1)) kept.push_back(candidates[i]);
        }
        candidates = std::move(kept);
      }
      for (const Node* n : candidates) {
        if (seen.insert(n).second) next.push_back(n);
      }
    }
    std::sort(next.begin(), next.end(),
              [&](const Node* a, const Node* b) { return order.at(a) < order.at(b); });
    current = std::move(next);
    if (current.empty()) break;
  }
  return current;
}

}  // namespace clipportal::xpath
