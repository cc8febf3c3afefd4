#include "clipportal/portal_model.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace clipportal::model {

using json = nlohmann::ordered_json;

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> enum_from(std::string_view text, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view enum_name(Enum value, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::pair<RefreshPolicy, std::string_view> kPolicies[] = {
    {RefreshPolicy::manual, "manual"}, {RefreshPolicy::interval, "interval"}};
constexpr std::pair<PortletMode, std::string_view> kModes[] = {
    {PortletMode::view, "view"}, {PortletMode::edit, "edit"}, {PortletMode::help, "help"}};
constexpr std::pair<WindowState, std::string_view> kStates[] = {
    {WindowState::normal, "normal"}, {WindowState::minimized, "minimized"}, {WindowState::maximized, "maximized"}};
constexpr std::pair<WorkflowStep::Kind, std::string_view> kSteps[] = {
    {WorkflowStep::Kind::get, "get"},
    {WorkflowStep::Kind::submit_form, "submit_form"},
    {WorkflowStep::Kind::follow_link, "follow_link"},
    {WorkflowStep::Kind::clip, "clip"}};

std::string type_name(const json& j) { return j.type_name(); }

// Collects problems while walking a parsed JSON document.
class Reader {
 public:
  std::vector<Problem> problems;

  void schema(const std::string& where, std::string message) {
    problems.push_back({Problem::Kind::schema, where, std::move(message), std::nullopt});
  }

  bool expect_object(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed,
                     std::initializer_list<std::string_view> required) {
    if (!j.is_object()) {
      schema(where, "expected object, got " + type_name(j));
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        schema(where + "/" + key, "unknown field");
      }
    }
    bool ok = true;
    for (auto key : required) {
      if (!j.contains(key)) {
        schema(where + "/" + std::string(key), "missing required field");
        ok = false;
      }
    }
    return ok;
  }

  std::optional<std::string> string_at(const json& j, std::string_view key, const std::string& where) {
    if (!j.contains(key)) return std::nullopt;
    const json& v = j.at(std::string(key));
    if (!v.is_string()) {
      schema(where + "/" + std::string(key), "expected string, got " + type_name(v));
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  template <typename Enum, std::size_t N>
  void enum_at(const json& j, std::string_view key, const std::string& where, Enum& out,
               const std::pair<Enum, std::string_view> (&table)[N]) {
    auto s = string_at(j, key, where);
    if (!s) return;
    if (auto v = enum_from(*s, table)) {
      out = *v;
    } else {
      schema(where + "/" + std::string(key), "unknown value '" + *s + "'");
    }
  }

  std::optional<xpath::XPathExpr> path_at(const json& j, std::string_view key, const std::string& where,
                                          std::string& source) {
    auto s = string_at(j, key, where);
    if (!s) return std::nullopt;
    source = *s;
    try {
      return xpath::compile(*s);
    } catch (const xpath::SyntaxError& e) {
      problems.push_back({Problem::Kind::rule, where + "/" + std::string(key), e.what(), e.offset()});
      return std::nullopt;
    }
  }

  std::optional<clip::ClipRule> clip_rule(const json& j, const std::string& where) {
    if (!expect_object(j, where, {"kind", "path", "set_attr", "remove_attr", "replace_text"}, {"kind", "path"})) {
      return std::nullopt;
    }
    clip::ClipRule rule;
    auto kind = string_at(j, "kind", where);
    if (!kind) return std::nullopt;
    if (*kind == "select") {
      rule.kind = clip::ClipRule::Kind::select;
    } else if (*kind == "cut") {
      rule.kind = clip::ClipRule::Kind::cut;
    } else if (*kind == "change") {
      rule.kind = clip::ClipRule::Kind::change;
    } else {
      schema(where + "/kind", "unknown value '" + *kind + "'");
      return std::nullopt;
    }
    auto path = path_at(j, "path", where, rule.source);
    if (!path) return std::nullopt;
    rule.path = std::move(*path);

    int specs = static_cast<int>(j.contains("set_attr")) + static_cast<int>(j.contains("remove_attr")) +
                static_cast<int>(j.contains("replace_text"));
    if (rule.kind != clip::ClipRule::Kind::change) {
      if (specs != 0) schema(where, "only change rules carry a change spec");
      return rule;
    }
    if (specs != 1) {
      schema(where, "change rule needs exactly one of set_attr, remove_attr, replace_text");
      return std::nullopt;
    }
    if (j.contains("set_attr")) {
      const json& s = j.at("set_attr");
      if (!expect_object(s, where + "/set_attr", {"name", "value"}, {"name", "value"})) return std::nullopt;
      auto n = string_at(s, "name", where + "/set_attr");
      auto v = string_at(s, "value", where + "/set_attr");
      if (!n || !v) return std::nullopt;
      rule.change = clip::ChangeSpec::set_attr(*n, *v);
    } else if (j.contains("remove_attr")) {
      auto n = string_at(j, "remove_attr", where);
      if (!n) return std::nullopt;
      rule.change = clip::ChangeSpec::remove_attr(*n);
    } else {
      const json& s = j.at("replace_text");
      if (!expect_object(s, where + "/replace_text", {"find", "replace"}, {"find", "replace"})) return std::nullopt;
      auto f = string_at(s, "find", where + "/replace_text");
      auto r = string_at(s, "replace", where + "/replace_text");
      if (!f || !r) return std::nullopt;
      rule.change = clip::ChangeSpec::replace_text(*f, *r);
    }
    return rule;
  }

  std::optional<WorkflowStep> step(const json& j, const std::string& where) {
    if (!expect_object(j, where, {"step", "url", "form_path", "fields", "link_path"}, {"step"})) return std::nullopt;
    WorkflowStep s;
    enum_at(j, "step", where, s.kind, kSteps);
    auto forbid = [&](std::initializer_list<std::string_view> keys) {
      for (auto k : keys) {
        if (j.contains(k)) schema(where + "/" + std::string(k), "not valid for this step");
      }
    };
    switch (s.kind) {
      case WorkflowStep::Kind::get: {
        forbid({"form_path", "fields", "link_path"});
        auto url = string_at(j, "url", where);
        if (!url) {
          if (!j.contains("url")) schema(where + "/url", "missing required field");
          return std::nullopt;
        }
        s.url = *url;
        break;
      }
      case WorkflowStep::Kind::submit_form: {
        forbid({"url", "link_path"});
        if (!j.contains("form_path")) schema(where + "/form_path", "missing required field");
        auto p = path_at(j, "form_path", where, s.path_source);
        if (!p) return std::nullopt;
        s.path = std::move(*p);
        if (j.contains("fields")) {
          const json& f = j.at("fields");
          if (!f.is_object()) {
            schema(where + "/fields", "expected object, got " + type_name(f));
            return std::nullopt;
          }
          for (const auto& [name, value] : f.items()) {
            if (!value.is_string()) {
              schema(where + "/fields/" + name, "expected string, got " + type_name(value));
              continue;
            }
            s.fields.emplace_back(name, value.get<std::string>());
          }
        }
        break;
      }
      case WorkflowStep::Kind::follow_link: {
        forbid({"url", "form_path", "fields"});
        if (!j.contains("link_path")) schema(where + "/link_path", "missing required field");
        auto p = path_at(j, "link_path", where, s.path_source);
        if (!p) return std::nullopt;
        s.path = std::move(*p);
        break;
      }
      case WorkflowStep::Kind::clip:
        forbid({"url", "form_path", "fields", "link_path"});
        break;
    }
    return s;
  }

  std::optional<PortletDefinition> portlet(const json& j, const std::string& id, const std::string& where) {
    if (!expect_object(j, where,
                       {"title", "source_url", "clip_rules", "workflow", "credential_ref", "refresh",
                        "sanitize_policy", "mode", "window_state"},
                       {"source_url", "clip_rules"})) {
      return std::nullopt;
    }
    PortletDefinition p;
    p.portlet_id = id;
    p.title = string_at(j, "title", where).value_or(id);
    p.source_url = string_at(j, "source_url", where).value_or("");
    p.credential_ref = string_at(j, "credential_ref", where);

    const json& rules = j.at("clip_rules");
    if (!rules.is_array()) {
      schema(where + "/clip_rules", "expected array, got " + type_name(rules));
    } else {
      for (std::size_t i = 0; i < rules.size(); ++i) {
        if (auto r = clip_rule(rules[i], where + "/clip_rules/" + std::to_string(i))) p.clip_rules.push_back(*r);
      }
    }
    if (j.contains("workflow")) {
      const json& wf = j.at("workflow");
      if (!wf.is_array()) {
        schema(where + "/workflow", "expected array, got " + type_name(wf));
      } else {
        for (std::size_t i = 0; i < wf.size(); ++i) {
          if (auto s = step(wf[i], where + "/workflow/" + std::to_string(i))) p.workflow.push_back(*s);
        }
      }
    }
    if (j.contains("refresh")) {
      const json& r = j.at("refresh");
      if (expect_object(r, where + "/refresh", {"policy", "interval_seconds"}, {})) {
        enum_at(r, "policy", where + "/refresh", p.refresh.policy, kPolicies);
        if (r.contains("interval_seconds")) {
          const json& iv = r.at("interval_seconds");
          if (!iv.is_number_integer() || iv.get<std::int64_t>() < 0 ||
              iv.get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
            schema(where + "/refresh/interval_seconds", "expected non-negative integer");
          } else {
            p.refresh.interval_seconds = iv.get<std::uint32_t>();
          }
        }
      }
    }
    if (auto s = string_at(j, "sanitize_policy", where)) {
      if (auto pol = clip::parse_policy(*s)) {
        p.sanitize_policy = *pol;
      } else {
        schema(where + "/sanitize_policy", "unknown value '" + *s + "'");
      }
    }
    enum_at(j, "mode", where, p.mode, kModes);
    enum_at(j, "window_state", where, p.window_state, kStates);
    return p;
  }
};

json rule_to_json(const clip::ClipRule& r) {
  json j;
  j["kind"] = r.kind == clip::ClipRule::Kind::select ? "select" : r.kind == clip::ClipRule::Kind::cut ? "cut" : "change";
  j["path"] = r.source.empty() ? xpath::render(r.path) : r.source;
  if (r.change) {
    switch (r.change->kind) {
      case clip::ChangeSpec::Kind::set_attr:
        j["set_attr"] = json{{"name", r.change->name}, {"value", r.change->value}};
        break;
      case clip::ChangeSpec::Kind::remove_attr:
        j["remove_attr"] = r.change->name;
        break;
      case clip::ChangeSpec::Kind::replace_text:
        j["replace_text"] = json{{"find", r.change->name}, {"replace", r.change->value}};
        break;
    }
  }
  return j;
}

json step_to_json(const WorkflowStep& s) {
  json j;
  j["step"] = to_string(s.kind);
  switch (s.kind) {
    case WorkflowStep::Kind::get:
      j["url"] = s.url;
      break;
    case WorkflowStep::Kind::submit_form: {
      j["form_path"] = s.path_source.empty() ? xpath::render(s.path) : s.path_source;
      json fields = json::object();
      for (const auto& [k, v] : s.fields) fields[k] = v;
      j["fields"] = fields;
      break;
    }
    case WorkflowStep::Kind::follow_link:
      j["link_path"] = s.path_source.empty() ? xpath::render(s.path) : s.path_source;
      break;
    case WorkflowStep::Kind::clip:
      break;
  }
  return j;
}

json portlet_json(const PortletDefinition& p) {
  json j;
  j["title"] = p.title;
  j["source_url"] = p.source_url;
  json rules = json::array();
  for (const auto& r : p.clip_rules) rules.push_back(rule_to_json(r));
  j["clip_rules"] = rules;
  if (!p.workflow.empty()) {
    json wf = json::array();
    for (const auto& s : p.workflow) wf.push_back(step_to_json(s));
    j["workflow"] = wf;
  }
  if (p.credential_ref) j["credential_ref"] = *p.credential_ref;
  j["refresh"] = json{{"policy", to_string(p.refresh.policy)}, {"interval_seconds", p.refresh.interval_seconds}};
  j["sanitize_policy"] = clip::to_string(p.sanitize_policy);
  j["mode"] = to_string(p.mode);
  j["window_state"] = to_string(p.window_state);
  return j;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DescriptorError({{Problem::Kind::schema, "", std::string("malformed JSON: ") + e.what(), std::nullopt}});
  }
}

void throw_if(const std::vector<Problem>& problems) {
  if (!problems.empty()) throw DescriptorError(problems);
}

std::vector<Problem> portlet_problems(const PortletDefinition& p) {
  std::vector<Problem> out;
  for (auto& msg : validate_workflow(p)) {
    out.push_back({Problem::Kind::workflow, "/portlets/" + p.portlet_id, std::move(msg), std::nullopt});
  }
  return out;
}

PortalDescriptor bumped(const PortalDescriptor& d) {
  PortalDescriptor next = d;
  next.version = d.version + 1;
  return next;
}

}  // namespace

std::string_view to_string(RefreshPolicy p) { return enum_name(p, kPolicies); }
std::string_view to_string(PortletMode m) { return enum_name(m, kModes); }
std::string_view to_string(WindowState s) { return enum_name(s, kStates); }
std::string_view to_string(WorkflowStep::Kind k) { return enum_name(k, kSteps); }

std::string_view to_string(Problem::Kind k) {
  switch (k) {
    case Problem::Kind::schema: return "SchemaError";
    case Problem::Kind::reference: return "ReferenceError";
    case Problem::Kind::rule: return "RuleError";
    case Problem::Kind::workflow: return "WorkflowError";
  }
  return "?";
}

WorkflowStep WorkflowStep::get(std::string url) {
  WorkflowStep s;
  s.kind = Kind::get;
  s.url = std::move(url);
  return s;
}

WorkflowStep WorkflowStep::submit_form(std::string_view form_path,
                                       std::vector<std::pair<std::string, std::string>> fields) {
  WorkflowStep s;
  s.kind = Kind::submit_form;
  s.path_source = std::string(form_path);
  s.path = xpath::compile(form_path);
  s.fields = std::move(fields);
  return s;
}

WorkflowStep WorkflowStep::follow_link(std::string_view link_path) {
  WorkflowStep s;
  s.kind = Kind::follow_link;
  s.path_source = std::string(link_path);
  s.path = xpath::compile(link_path);
  return s;
}

WorkflowStep WorkflowStep::clip() { return WorkflowStep{}; }

bool WorkflowStep::uses_placeholders() const {
  return std::any_of(fields.begin(), fields.end(), [](const auto& f) {
    return f.second == kUserPlaceholder || f.second == kPassPlaceholder;
  });
}

std::vector<WorkflowStep> PortletDefinition::effective_workflow() const {
  if (!workflow.empty()) return workflow;
  return {WorkflowStep::get(source_url), WorkflowStep::clip()};
}

std::vector<std::string> PortalDescriptor::source_origins() const {
  std::set<std::string> origins;
  for (const auto& [id, p] : portlets) {
    if (auto u = Url::parse(p.source_url)) origins.insert(u->origin());
    for (const auto& s : p.workflow) {
      if (s.kind != WorkflowStep::Kind::get) continue;
      if (auto u = Url::parse(s.url)) origins.insert(u->origin());
    }
  }
  return {origins.begin(), origins.end()};
}

namespace {
std::string join_problems(const std::vector<Problem>& problems) {
  std::string out;
  for (const auto& p : problems) {
    if (!out.empty()) out += "; ";
    out += std::string(to_string(p.kind)) + " at " + (p.location.empty() ? "/" : p.location) + ": " + p.message;
  }
  return out;
}
}  // namespace

DescriptorError::DescriptorError(std::vector<Problem> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

bool DescriptorError::has(Problem::Kind k) const {
  return std::any_of(problems_.begin(), problems_.end(), [k](const Problem& p) { return p.kind == k; });
}

std::vector<std::string> validate_workflow(const PortletDefinition& def) {
  std::vector<std::string> errors;
  auto source = Url::parse(def.source_url);
  if (!source) errors.push_back("source_url must be an absolute URL");
  if (std::none_of(def.clip_rules.begin(), def.clip_rules.end(),
                   [](const clip::ClipRule& r) { return r.kind == clip::ClipRule::Kind::select; })) {
    errors.push_back("clip_rules need at least one select rule");
  }
  for (const auto& r : def.clip_rules) {
    if (r.kind == clip::ClipRule::Kind::change && !r.change) errors.push_back("change rule without change spec");
  }
  if (def.refresh.interval_seconds < 1) errors.push_back("refresh interval must be at least 1 second");

  const auto wf = def.effective_workflow();
  std::size_t clips = 0;
  bool placeholders = false;
  for (std::size_t i = 0; i < wf.size(); ++i) {
    const auto& s = wf[i];
    if (s.kind == WorkflowStep::Kind::clip) ++clips;
    if (s.kind == WorkflowStep::Kind::get && !Url::parse(s.url)) {
      // Relative get URLs resolve against source_url.
      if (!source || !resolve(*source, s.url)) {
        errors.push_back("step " + std::to_string(i) + ": get url does not resolve");
      }
    }
    if (s.kind == WorkflowStep::Kind::submit_form && s.uses_placeholders()) placeholders = true;
  }
  if (clips != 1 || wf.back().kind != WorkflowStep::Kind::clip) {
    errors.push_back("terminal clip: workflow needs exactly one clip step, last");
  }
  if (wf.front().kind != WorkflowStep::Kind::get) {
    errors.push_back("workflow must start with a get step");
  }
  if (placeholders && !def.credential_ref) errors.push_back("credential_ref required");
  if (!placeholders && def.credential_ref) errors.push_back("credential_ref set but no step uses {user} or {pass}");
  return errors;
}

std::vector<Problem> validate_descriptor(const PortalDescriptor& d) {
  std::vector<Problem> out;
  std::set<std::string> placed;
  for (std::size_t r = 0; r < d.layout.size(); ++r) {
    for (std::size_t c = 0; c < d.layout[r].size(); ++c) {
      const std::string& id = d.layout[r][c];
      std::string where = "/layout/" + std::to_string(r) + "/" + std::to_string(c);
      if (!d.portlets.contains(id)) {
        out.push_back({Problem::Kind::reference, where, "unresolved portlet id \"" + id + "\"", std::nullopt});
      } else if (!placed.insert(id).second) {
        out.push_back({Problem::Kind::reference, where, "portlet \"" + id + "\" placed twice", std::nullopt});
      }
    }
  }
  for (const auto& [id, p] : d.portlets) {
    if (!placed.contains(id)) {
      out.push_back({Problem::Kind::reference, "/portlets/" + id, "portlet \"" + id + "\" missing from layout",
                     std::nullopt});
    }
    auto more = portlet_problems(p);
    out.insert(out.end(), more.begin(), more.end());
  }
  if (d.portal_id.empty()) out.push_back({Problem::Kind::schema, "/portal_id", "must be non-empty", std::nullopt});
  if (d.version < 1) out.push_back({Problem::Kind::schema, "/version", "must be at least 1", std::nullopt});
  return out;
}

PortalDescriptor load_descriptor(std::string_view json_text) {
  json j = parse_json(json_text);
  Reader rd;
  PortalDescriptor d;
  if (!rd.expect_object(j, "", {"portal_id", "title", "version", "layout", "portlets"}, {"portal_id", "portlets"})) {
    throw_if(rd.problems);
  }
  d.portal_id = rd.string_at(j, "portal_id", "").value_or("");
  d.title = rd.string_at(j, "title", "").value_or(d.portal_id);
  if (j.contains("version")) {
    const json& v = j.at("version");
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1) {
      rd.schema("/version", "expected positive integer");
    } else {
      d.version = v.get<std::uint64_t>();
    }
  }
  if (j.contains("layout")) {
    const json& layout = j.at("layout");
    if (!layout.is_array()) {
      rd.schema("/layout", "expected array of rows");
    } else {
      for (std::size_t r = 0; r < layout.size(); ++r) {
        if (!layout[r].is_array()) {
          rd.schema("/layout/" + std::to_string(r), "expected array of portlet ids");
          continue;
        }
        std::vector<std::string> row;
        for (std::size_t c = 0; c < layout[r].size(); ++c) {
          if (!layout[r][c].is_string()) {
            rd.schema("/layout/" + std::to_string(r) + "/" + std::to_string(c), "expected string");
            continue;
          }
          row.push_back(layout[r][c].get<std::string>());
        }
        d.layout.push_back(std::move(row));
      }
    }
  }
  const json& portlets = j.at("portlets");
  if (!portlets.is_object()) {
    rd.schema("/portlets", "expected object, got " + type_name(portlets));
  } else {
    for (const auto& [id, pj] : portlets.items()) {
      if (auto p = rd.portlet(pj, id, "/portlets/" + id)) d.portlets.emplace(id, std::move(*p));
    }
  }
  throw_if(rd.problems);
  throw_if(validate_descriptor(d));
  return d;
}

std::string serialize_descriptor(const PortalDescriptor& d) {
  json j;
  j["portal_id"] = d.portal_id;
  j["title"] = d.title;
  j["version"] = d.version;
  j["layout"] = d.layout;
  json portlets = json::object();
  for (const auto& [id, p] : d.portlets) portlets[id] = portlet_json(p);
  j["portlets"] = portlets;
  return j.dump(2) + "\n";
}

PortletDefinition portlet_from_json(std::string_view portlet_id, std::string_view json_text) {
  json j = parse_json(json_text);
  Reader rd;
  auto p = rd.portlet(j, std::string(portlet_id), "/portlets/" + std::string(portlet_id));
  throw_if(rd.problems);
  throw_if(portlet_problems(*p));
  return *p;
}

std::string portlet_to_json(const PortletDefinition& p) { return portlet_json(p).dump(2); }

PortalDescriptor with_portlet_added(const PortalDescriptor& d, PortletDefinition def) {
  if (d.portlets.contains(def.portlet_id)) throw DuplicatePortlet(def.portlet_id);
  throw_if(portlet_problems(def));
  PortalDescriptor next = bumped(d);
  next.layout.push_back({def.portlet_id});
  std::string id = def.portlet_id;
  next.portlets.emplace(std::move(id), std::move(def));
  return next;
}

PortalDescriptor with_portlet_replaced(const PortalDescriptor& d, PortletDefinition def) {
  if (!d.portlets.contains(def.portlet_id)) throw NotFound("portlet " + def.portlet_id);
  throw_if(portlet_problems(def));
  PortalDescriptor next = bumped(d);
  next.portlets[def.portlet_id] = std::move(def);
  return next;
}

PortalDescriptor with_portlet_removed(const PortalDescriptor& d, std::string_view portlet_id) {
  std::string id(portlet_id);
  if (!d.portlets.contains(id)) throw NotFound("portlet " + id);
  PortalDescriptor next = bumped(d);
  next.portlets.erase(id);
  for (auto& row : next.layout) std::erase(row, id);
  std::erase_if(next.layout, [](const auto& row) { return row.empty(); });
  return next;
}

PortalDescriptor with_window_state(const PortalDescriptor& d, std::string_view portlet_id, WindowState s) {
  std::string id(portlet_id);
  if (!d.portlets.contains(id)) throw NotFound("portlet " + id);
  PortalDescriptor next = bumped(d);
  next.portlets[id].window_state = s;
  return next;
}

std::string credential_to_json(const CredentialEntry& e) {
  json extra = json::object();
  for (const auto& [k, v] : e.extra_fields) extra[k] = v;
  return json{{"service_id", e.service_id}, {"username", e.username}, {"password", e.password},
              {"extra_fields", extra}}
      .dump();
}

CredentialEntry credential_from_json(std::string_view text) {
  json j = json::parse(text);
  CredentialEntry e;
  e.service_id = j.at("service_id").get<std::string>();
  e.username = j.at("username").get<std::string>();
  e.password = j.at("password").get<std::string>();
  if (j.contains("extra_fields")) {
    for (const auto& [k, v] : j.at("extra_fields").items()) e.extra_fields.emplace_back(k, v.get<std::string>());
  }
  return e;
}

}  // namespace clipportal::model
