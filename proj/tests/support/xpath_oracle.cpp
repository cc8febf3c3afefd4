#include "xpath_oracle.hpp"

#include <algorithm>

namespace clipportal::oracle {

using html::Node;
using html::NodeKind;
using xpath::Axis;
using xpath::NodeTest;
using xpath::Predicate;
using xpath::Step;

namespace {

void walk(const Node& n, std::vector<const Node*>& out) {
  out.push_back(&n);
  for (const auto& a : n.attributes()) out.push_back(a.get());
  for (const auto& c : n.children()) walk(*c, out);
}

bool is_proper_ancestor(const Node* a, const Node* n) {
  for (const Node* p = n->parent(); p != nullptr; p = p->parent()) {
    if (p == a) return true;
  }
  return false;
}

bool related(Axis axis, const Node* context, const Node* n) {
  const bool is_attr = n->kind() == NodeKind::attribute;
  switch (axis) {
    case Axis::child: return !is_attr && n->parent() == context;
    case Axis::descendant_or_self:
      if (is_attr) return n == context;
      return n == context || is_proper_ancestor(context, n);
    case Axis::self: return n == context;
    case Axis::parent: return context->parent() == n;
    case Axis::attribute: return is_attr && n->parent() == context;
  }
  return false;
}

bool passes_test(const Step& step, const Node* n) {
  const bool attr_axis = step.axis == Axis::attribute;
  switch (step.test.kind) {
    case NodeTest::Kind::node: return true;
    case NodeTest::Kind::text: return n->kind() == NodeKind::text;
    case NodeTest::Kind::wildcard:
      return attr_axis ? n->kind() == NodeKind::attribute : n->kind() == NodeKind::element;
    case NodeTest::Kind::name:
      if (attr_axis) return n->kind() == NodeKind::attribute && n->name() == step.test.name;
      return n->kind() == NodeKind::element && n->name() == step.test.name;
  }
  return false;
}

// String-value of "@name" for n: the attribute's value, or no value.
const std::string* attribute_value(const Node* n, const std::string& name) {
  for (const auto& a : n->attributes()) {
    if (a->name() == name) return &a->value();
  }
  return nullptr;
}

std::string first_text(const Node* n) {
  for (const auto& c : n->children()) {
    if (c->kind() == NodeKind::text) return c->value();
  }
  return "";
}

bool contains_substring(const std::string& hay, const std::string& needle) {
  if (needle.empty()) return true;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool predicate_true(const Predicate& p, const Node* n, std::size_t position) {
  switch (p.kind) {
    case Predicate::Kind::position: return position == p.index;
    case Predicate::Kind::attr_present: return attribute_value(n, p.attribute) != nullptr;
    case Predicate::Kind::attr_equals: {
      const std::string* v = attribute_value(n, p.attribute);
      return v != nullptr && *v == p.literal;
    }
    case Predicate::Kind::contains: {
      std::string hay;
      if (p.attribute.empty()) {
        hay = first_text(n);
      } else if (const std::string* v = attribute_value(n, p.attribute)) {
        hay = *v;
      }
      return contains_substring(hay, p.literal);
    }
    case Predicate::Kind::conjunction:
      for (const auto& op : p.operands) {
        if (!predicate_true(op, n, position)) return false;
      }
      return true;
    case Predicate::Kind::disjunction:
      for (const auto& op : p.operands) {
        if (predicate_true(op, n, position)) return true;
      }
      return false;
  }
  return false;
}

// Does candidate n survive step `step` from context c? Positions are
// counted by scanning the full document in order.
bool selected_by(const Step& step, const Node* c, const Node* n, const std::vector<const Node*>& all) {
  if (!related(step.axis, c, n) || !passes_test(step, n)) return false;
  std::vector<const Node*> survivors;
  for (const Node* m : all) {
    if (related(step.axis, c, m) && passes_test(step, m)) survivors.push_back(m);
  }
  for (const Predicate& p : step.predicates) {
    std::vector<const Node*> next;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      if (predicate_true(p, survivors[i], i + 1)) next.push_back(survivors[i]);
    }
    survivors = std::move(next);
  }
  return std::find(survivors.begin(), survivors.end(), n) != survivors.end();
}

}  // namespace

std::vector<const Node*> all_nodes_in_document_order(const Node& root) {
  std::vector<const Node*> out;
  walk(root, out);
  return out;
}

xpath::NodeSet oracle_evaluate(const xpath::XPathExpr& expr, const Node& context) {
  const Node* root = &context;
  while (root->parent()) root = root->parent();
  const auto all = all_nodes_in_document_order(*root);

  std::vector<const Node*> current{expr.absolute ? root : &context};
  for (const Step& step : expr.steps) {
    std::vector<const Node*> next;
    for (const Node* n : all) {
      for (const Node* c : current) {
        if (selected_by(step, c, n, all)) {
          next.push_back(n);
          break;
        }
      }
    }
    current = std::move(next);
  }
  return current;
}

namespace {

const char* pick(std::mt19937& rng, std::initializer_list<const char*> options) {
  std::uniform_int_distribution<std::size_t> d(0, options.size() - 1);
  return *(options.begin() + static_cast<std::ptrdiff_t>(d(rng)));
}

bool chance(std::mt19937& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int uniform(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

void grow(std::mt19937& rng, Node& parent, int& budget, int depth) {
  int children = uniform(rng, 0, 4);
  for (int i = 0; i < children && budget > 0; ++i) {
    if (chance(rng, 0.3) || depth > 5) {
      parent.append_child(Node::make_text(pick(rng, {"x", "y", "note", "hello world", "a"})));
      --budget;
      continue;
    }
    auto el = Node::make_element(pick(rng, {"div", "p", "span", "a", "ul", "li", "b"}));
    if (chance(rng, 0.4)) el->set_attr("id", pick(rng, {"a", "b", "main", "note"}));
    if (chance(rng, 0.4)) el->set_attr("class", pick(rng, {"note", "x y", "a", ""}));
    if (chance(rng, 0.2)) el->set_attr("href", pick(rng, {"/x", "page.html", "#top"}));
    --budget;
    Node& placed = parent.append_child(std::move(el));
    grow(rng, placed, budget, depth + 1);
  }
}

Predicate random_primary(std::mt19937& rng, int depth) {
  Predicate p;
  switch (uniform(rng, 0, depth > 1 ? 3 : 5)) {
    case 0:
      p.kind = Predicate::Kind::attr_present;
      p.attribute = pick(rng, {"id", "class", "href", "title"});
      break;
    case 1:
      p.kind = Predicate::Kind::attr_equals;
      p.attribute = pick(rng, {"id", "class"});
      p.literal = pick(rng, {"a", "b", "note", "x y", ""});
      break;
    case 2:
      p.kind = Predicate::Kind::contains;
      p.attribute = pick(rng, {"id", "class", "href"});
      p.literal = pick(rng, {"a", "o", "x", ""});
      break;
    case 3:
      p.kind = Predicate::Kind::contains;
      p.literal = pick(rng, {"x", "note", "world", "o"});
      break;
    default: {
      p.kind = chance(rng, 0.5) ? Predicate::Kind::conjunction : Predicate::Kind::disjunction;
      int n = uniform(rng, 2, 3);
      for (int i = 0; i < n; ++i) p.operands.push_back(random_primary(rng, depth + 1));
      break;
    }
  }
  return p;
}

Step random_step(std::mt19937& rng) {
  Step s;
  switch (uniform(rng, 0, 9)) {
    case 0: s.axis = Axis::self; return s;
    case 1: s.axis = Axis::parent; return s;
    case 2:
      s.axis = Axis::attribute;
      if (chance(rng, 0.3)) {
        s.test.kind = NodeTest::Kind::wildcard;
      } else {
        s.test = {NodeTest::Kind::name, pick(rng, {"id", "class", "href"})};
      }
      return s;
    case 3: s.test.kind = NodeTest::Kind::text; break;
    case 4: s.test.kind = NodeTest::Kind::node; break;
    case 5: s.test.kind = NodeTest::Kind::wildcard; break;
    default:
      s.test = {NodeTest::Kind::name, pick(rng, {"div", "p", "span", "a", "ul", "li", "b", "table"})};
  }
  int preds = uniform(rng, 0, 2);
  for (int i = 0; i < preds; ++i) {
    if (chance(rng, 0.35)) {
      Predicate p;
      p.kind = Predicate::Kind::position;
      p.index = static_cast<std::size_t>(uniform(rng, 1, 3));
      s.predicates.push_back(p);
    } else {
      s.predicates.push_back(random_primary(rng, 0));
    }
  }
  return s;
}

}  // namespace

std::unique_ptr<Node> random_document(std::mt19937& rng, int max_nodes) {
  auto root = Node::make_document();
  Node& html = root->append_child(Node::make_element("html"));
  Node& body = html.append_child(Node::make_element("body"));
  int budget = std::max(0, max_nodes - 2);
  while (budget > 0) {
    int before = budget;
    grow(rng, body, budget, 0);
    if (budget == before || chance(rng, 0.5)) break;
  }
  return root;
}

xpath::XPathExpr random_expression(std::mt19937& rng) {
  xpath::XPathExpr e;
  e.absolute = chance(rng, 0.7);
  int steps = uniform(rng, 1, 4);
  for (int i = 0; i < steps; ++i) {
    // A leading '//' only exists for absolute paths in abbreviated syntax.
    if ((e.absolute || i > 0) && chance(rng, i == 0 ? 0.75 : 0.35)) {
      e.steps.push_back(Step{Axis::descendant_or_self, {NodeTest::Kind::node, {}}, {}});
    }
    e.steps.push_back(random_step(rng));
  }
  return e;
}

}  // namespace clipportal::oracle
