#include "clipportal/clip.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "clipportal/crypto.hpp"

namespace clipportal::clip {

using html::Node;
using html::NodeKind;

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_ws(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::size_t count_nodes(const Node& n) {
  std::size_t total = 0;
  for (const auto& c : n.children()) total += 1 + count_nodes(*c);
  return total;
}

void replace_all(std::string& s, std::string_view find, std::string_view repl) {
  if (find.empty()) return;
  std::size_t pos = 0;
  while ((pos = s.find(find, pos)) != std::string::npos) {
    s.replace(pos, find.size(), repl);
    pos += repl.size();
  }
}

void replace_text_below(Node& n, const ChangeSpec& spec) {
  if (n.kind() == NodeKind::text) {
    std::string v = n.value();
    replace_all(v, spec.name, spec.value);
    n.set_value(std::move(v));
    return;
  }
  for (const auto& c : n.children()) replace_text_below(*c, spec);
}

// Script URL check with the tab/newline stripping browsers apply to URLs.
bool is_script_url(std::string_view value) {
  std::string cleaned;
  for (char c : value) {
    if (c == '\t' || c == '\n' || c == '\r') continue;
    cleaned += c;
  }
  std::string scheme = scheme_of(cleaned);
  return scheme == "javascript" || scheme == "vbscript";
}

bool is_active_embed(std::string_view name) {
  return name == "object" || name == "embed" || name == "applet";
}

class Copier {
 public:
  Copier(const std::unordered_set<const Node*>& cut) : cut_(cut) {}

  void copy(const Node& original, Node& into) {
    if (cut_.contains(&original)) return;
    switch (original.kind()) {
      case NodeKind::document:
        map_[&original] = &into;
        for (const auto& c : original.children()) copy(*c, into);
        break;
      case NodeKind::attribute:
        // A selected attribute contributes its value as text.
        map_[&original] = &into.append_child(Node::make_text(original.value()));
        break;
      case NodeKind::text:
        map_[&original] = &into.append_child(Node::make_text(original.value()));
        break;
      case NodeKind::comment:
        map_[&original] = &into.append_child(Node::make_comment(original.value()));
        break;
      case NodeKind::element: {
        Node& el = into.append_child(Node::make_element(original.name()));
        map_[&original] = &el;
        for (const auto& a : original.attributes()) {
          if (!cut_.contains(a.get())) el.set_attr(a->name(), a->value());
        }
        for (const auto& c : original.children()) copy(*c, el);
        break;
      }
    }
  }

  Node* find(const Node* original) const {
    auto it = map_.find(original);
    return it == map_.end() ? nullptr : it->second;
  }

 private:
  const std::unordered_set<const Node*>& cut_;
  std::unordered_map<const Node*, Node*> map_;
};

void apply_change(const Node& original, const ChangeSpec& spec, const Copier& copier) {
  if (original.kind() == NodeKind::attribute) {
    Node* owner = copier.find(original.parent());
    if (!owner || !owner->attr(original.name())) return;
    if (spec.kind == ChangeSpec::Kind::replace_text) {
      std::string v(*owner->attr(original.name()));
      replace_all(v, spec.name, spec.value);
      owner->set_attr(original.name(), std::move(v));
    } else if (spec.kind == ChangeSpec::Kind::remove_attr && spec.name == original.name()) {
      owner->remove_attr(original.name());
    }
    return;
  }
  Node* copy = copier.find(&original);
  if (!copy) return;  // cut, or outside the selected scope
  switch (spec.kind) {
    case ChangeSpec::Kind::set_attr:
      if (copy->is_element()) copy->set_attr(spec.name, spec.value);
      break;
    case ChangeSpec::Kind::remove_attr:
      if (copy->is_element()) copy->remove_attr(spec.name);
      break;
    case ChangeSpec::Kind::replace_text:
      replace_text_below(*copy, spec);
      break;
  }
}

void number(const Node& n, std::unordered_map<const Node*, std::size_t>& order) {
  order.emplace(&n, order.size());
  for (const auto& a : n.attributes()) order.emplace(a.get(), order.size());
  for (const auto& c : n.children()) number(*c, order);
}

bool inside_any(const Node& n, const std::unordered_set<const Node*>& roots) {
  for (const Node* p = n.parent(); p; p = p->parent()) {
    if (roots.contains(p)) return true;
  }
  return false;
}

Url effective_base(const html::Document& doc) {
  if (const Node* head = doc.head()) {
    for (const auto& c : head->children()) {
      if (c->is_element() && c->name() == "base") {
        if (auto href = c->attr("href")) {
          if (auto resolved = resolve(doc.base_url(), *href)) return *resolved;
        }
        break;
      }
    }
  }
  return doc.base_url();
}

void escape_into(std::string& out, std::string_view s, bool attr) {
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<' && !attr) out += "&lt;";
    else if (c == '>' && !attr) out += "&gt;";
    else if (c == '"' && attr) out += "&quot;";
    else out += c;
  }
}

void normalized_into(std::string& out, const Node& n) {
  switch (n.kind()) {
    case NodeKind::document:
      for (const auto& c : n.children()) normalized_into(out, *c);
      break;
    case NodeKind::comment:
    case NodeKind::attribute:
      break;
    case NodeKind::text: {
      std::string t = collapse_whitespace(n.value());
      escape_into(out, t, false);
      break;
    }
    case NodeKind::element:
      out += '<';
      out += n.name();
      for (const auto& a : n.attributes()) {
        out += ' ';
        out += a->name();
        out += "=\"";
        escape_into(out, a->value(), true);
        out += '"';
      }
      out += '>';
      if (html::is_void_element(n.name())) break;
      for (const auto& c : n.children()) normalized_into(out, *c);
      out += "</";
      out += n.name();
      out += '>';
      break;
  }
}

}  // namespace

std::string_view to_string(SanitizePolicy p) {
  return p == SanitizePolicy::strict ? "strict" : "trusted";
}

std::optional<SanitizePolicy> parse_policy(std::string_view text) {
  if (text == "strict") return SanitizePolicy::strict;
  if (text == "trusted") return SanitizePolicy::trusted;
  return std::nullopt;
}

ClipRule ClipRule::select(std::string_view path) {
  return ClipRule{Kind::select, std::string(path), xpath::compile(path), std::nullopt};
}

ClipRule ClipRule::cut(std::string_view path) {
  return ClipRule{Kind::cut, std::string(path), xpath::compile(path), std::nullopt};
}

ClipRule ClipRule::make_change(std::string_view path, ChangeSpec spec) {
  return ClipRule{Kind::change, std::string(path), xpath::compile(path), std::move(spec)};
}

bool is_link_attribute(std::string_view name) {
  return name == "href" || name == "src" || name == "action" || name == "formaction" ||
         name == "poster" || name == "background" || name == "codebase" || name == "cite";
}

std::size_t rebase_links(Node& container, const Url& base) {
  std::size_t unresolved = 0;
  if (container.is_element()) {
    std::vector<std::pair<std::string, std::string>> updates;
    for (const auto& a : container.attributes()) {
      bool link = is_link_attribute(a->name()) || (a->name() == "data" && container.name() == "object");
      if (!link) continue;
      std::string_view v = a->value();
      auto first = v.find_first_not_of(" \t\n\r\f");
      if (first != std::string_view::npos && v[first] == '#') continue;
      if (has_scheme(v)) continue;
      if (auto resolved = resolve(base, v)) {
        updates.emplace_back(a->name(), resolved->str());
      } else {
        ++unresolved;
      }
    }
    for (auto& [name, value] : updates) container.set_attr(name, std::move(value));
  }
  for (const auto& c : container.children()) unresolved += rebase_links(*c, base);
  return unresolved;
}

std::size_t sanitize(Node& container, SanitizePolicy policy) {
  std::size_t removed = 0;
  std::vector<const Node*> doomed;
  for (const auto& c : container.children()) {
    if (!c->is_element()) continue;
    if (c->name() == "script" || (policy == SanitizePolicy::strict && is_active_embed(c->name()))) {
      doomed.push_back(c.get());
    }
  }
  for (const Node* d : doomed) {
    container.remove_child(*d);
    ++removed;
  }
  if (container.is_element()) {
    std::vector<std::string> drop;
    for (const auto& a : container.attributes()) {
      const std::string& name = a->name();
      bool handler = name.size() > 2 && name.starts_with("on");
      bool script_url = (is_link_attribute(name) || name == "data" || name == "formaction") &&
                        is_script_url(a->value());
      if (handler || script_url) drop.push_back(name);
    }
    for (const auto& name : drop) container.remove_attr(name);
    removed += drop.size();
  }
  for (const auto& c : container.children()) removed += sanitize(*c, policy);
  return removed;
}

std::string normalize_for_digest(std::string_view html) {
  auto root = html::parse_fragment(html);
  std::string out;
  normalized_into(out, *root);
  return out;
}

std::string fragment_digest(std::string_view html) {
  return crypto::sha256_hex(normalize_for_digest(html));
}

PortletFragment apply_clip(const html::Document& doc, const std::vector<ClipRule>& rules,
                           SanitizePolicy policy) {
  bool any_select = std::any_of(rules.begin(), rules.end(),
                                [](const ClipRule& r) { return r.kind == ClipRule::Kind::select; });
  if (!any_select) throw std::invalid_argument("clip rules need at least one select rule");

  std::unordered_map<const Node*, std::size_t> order;
  number(doc.root(), order);

  std::unordered_set<const Node*> selected_set;
  std::unordered_set<const Node*> cut;
  for (const auto& rule : rules) {
    if (rule.kind == ClipRule::Kind::select) {
      for (const Node* n : xpath::evaluate(rule.path, doc.root())) selected_set.insert(n);
    } else if (rule.kind == ClipRule::Kind::cut) {
      for (const Node* n : xpath::evaluate(rule.path, doc.root())) cut.insert(n);
    }
  }
  if (selected_set.empty()) throw EmptyClip();

  std::vector<const Node*> roots;
  for (const Node* n : selected_set) {
    if (!inside_any(*n, selected_set)) roots.push_back(n);
  }
  std::sort(roots.begin(), roots.end(),
            [&](const Node* a, const Node* b) { return order.at(a) < order.at(b); });

  auto fragment = Node::make_document();
  Copier copier(cut);
  for (const Node* r : roots) copier.copy(*r, *fragment);

  for (const auto& rule : rules) {
    if (rule.kind != ClipRule::Kind::change || !rule.change) continue;
    for (const Node* n : xpath::evaluate(rule.path, doc.root())) apply_change(*n, *rule.change, copier);
  }

  const Url base = effective_base(doc);
  PortletFragment out;
  out.unresolved_links = rebase_links(*fragment, base);
  out.sanitize_removals = sanitize(*fragment, policy);
  out.html = html::serialize_children(*fragment);
  out.node_count = count_nodes(*fragment);
  out.source_origin = doc.base_url().origin();
  out.digest = fragment_digest(out.html);
  out.clipped_at = std::chrono::system_clock::now();
  return out;
}

}  // namespace clipportal::clip
