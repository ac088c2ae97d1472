#include "ddsrecon/permissions.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "ddsrecon/encoding.hpp"
#include "ddsrecon/errors.hpp"
#include "ddsrecon/xml.hpp"

namespace ddsrecon::perm {

std::string_view to_string(Qualifier q) {
  switch (q) {
    case Qualifier::Allow: return "ALLOW";
    case Qualifier::Deny: return "DENY";
    case Qualifier::Error: return "ERROR";
  }
  return "?";
}

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::Publish: return "publish";
    case Verb::Subscribe: return "subscribe";
    case Verb::Relay: return "relay";
  }
  return "?";
}

std::vector<DataTag> make_tag_set(std::vector<DataTag> tags) {
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

bool DomainSet::contains(int id) const {
  for (const auto& [lo, hi] : entries_)
    if (id >= lo && id <= hi) return true;
  return false;
}

const CriteriaSet* Rule::criteria_for(Verb v) const {
  switch (v) {
    case Verb::Publish: return publish ? &*publish : nullptr;
    case Verb::Subscribe: return subscribe ? &*subscribe : nullptr;
    case Verb::Relay: return relay ? &*relay : nullptr;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

constexpr std::string_view kObfuscationScheme = "hmac-sha256-base64";

[[noreturn]] void fail_at(const std::string& path, const xml::Element& el,
                          const std::string& msg) {
  throw ParseError(msg + " at " + path, el.offset);
}

const xml::Element& require_child(const xml::Element& el, const std::string& path,
                                  std::string_view name) {
  const xml::Element* c = el.find(name);
  if (c == nullptr)
    fail_at(path, el, "missing required element <" + std::string(name) + ">");
  return *c;
}

std::string require_text(const xml::Element& el, const std::string& path) {
  if (!el.children.empty())
    fail_at(path, el, "expected text content, found child elements");
  return el.text;
}

int parse_domain_id(const xml::Element& el, const std::string& path) {
  std::string t = require_text(el, path);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || value < 0)
    fail_at(path, el, "invalid domain id \"" + t + "\"");
  return value;
}

glob::GlobPattern parse_pattern(const xml::Element& el, const std::string& path) {
  std::string t = require_text(el, path);
  try {
    return glob::GlobPattern(t);
  } catch (const ParseError& e) {
    fail_at(path, el, "malformed pattern \"" + t + "\": " + e.what());
  }
}

Timestamp parse_time_element(const xml::Element& el, const std::string& path) {
  try {
    return parse_timestamp(require_text(el, path));
  } catch (const InputError& e) {
    fail_at(path, el, e.what());
  }
}

DomainSet parse_domains(const xml::Element& el, const std::string& path) {
  DomainSet out;
  std::size_t index = 0;
  for (const xml::Element& c : el.children) {
    std::string cpath = path + "/" + c.name + "[" + std::to_string(index++) + "]";
    if (c.name == "id") {
      out.add_id(parse_domain_id(c, cpath));
    } else if (c.name == "id_range") {
      int lo = parse_domain_id(require_child(c, cpath, "min"), cpath + "/min");
      int hi = parse_domain_id(require_child(c, cpath, "max"), cpath + "/max");
      if (lo > hi) fail_at(cpath, c, "empty domain range");
      out.add_range(lo, hi);
    } else {
      fail_at(cpath, c, "unknown element <" + c.name + ">");
    }
  }
  if (out.empty()) fail_at(path, el, "empty <domains> section");
  return out;
}

CriteriaSet parse_criteria(const xml::Element& el, const std::string& path) {
  CriteriaSet out;
  for (const xml::Element& c : el.children) {
    if (c.name == "topics") {
      std::size_t i = 0;
      for (const xml::Element& t : c.children) {
        std::string tpath = path + "/topics/topic[" + std::to_string(i++) + "]";
        if (t.name != "topic") fail_at(tpath, t, "unknown element <" + t.name + ">");
        out.topics.push_back(parse_pattern(t, tpath));
      }
    } else if (c.name == "partitions") {
      std::size_t i = 0;
      for (const xml::Element& p : c.children) {
        std::string ppath =
            path + "/partitions/partition[" + std::to_string(i++) + "]";
        if (p.name != "partition")
          fail_at(ppath, p, "unknown element <" + p.name + ">");
        out.partitions.push_back(parse_pattern(p, ppath));
      }
    } else if (c.name == "data_tags") {
      std::size_t i = 0;
      for (const xml::Element& t : c.children) {
        std::string tpath = path + "/data_tags/tag[" + std::to_string(i++) + "]";
        if (t.name != "tag") fail_at(tpath, t, "unknown element <" + t.name + ">");
        DataTag tag;
        tag.name = require_text(require_child(t, tpath, "name"), tpath + "/name");
        tag.value =
            require_text(require_child(t, tpath, "value"), tpath + "/value");
        out.data_tags.push_back(std::move(tag));
      }
    } else {
      fail_at(path, c, "unknown element <" + c.name + ">");
    }
  }
  if (out.topics.empty()) fail_at(path, el, "criteria without <topics>");
  return out;
}

Rule parse_rule(const xml::Element& el, const std::string& path, Qualifier q) {
  Rule rule;
  rule.qualifier = q;
  bool saw_domains = false;
  for (const xml::Element& c : el.children) {
    if (c.name == "domains") {
      rule.domains = parse_domains(c, path + "/domains");
      saw_domains = true;
    } else if (c.name == "publish") {
      rule.publish = parse_criteria(c, path + "/publish");
    } else if (c.name == "subscribe") {
      rule.subscribe = parse_criteria(c, path + "/subscribe");
    } else if (c.name == "relay") {
      rule.relay = parse_criteria(c, path + "/relay");
    } else {
      fail_at(path, c, "unknown element <" + c.name + ">");
    }
  }
  if (!saw_domains) fail_at(path, el, "missing required element <domains>");
  if (!rule.publish && !rule.subscribe && !rule.relay)
    fail_at(path, el, "rule needs at least one of publish/subscribe/relay");
  return rule;
}

Grant parse_grant(const xml::Element& el, const std::string& path) {
  Grant grant;
  bool saw_validity = false;
  bool saw_default = false;
  std::size_t rule_index = 0;
  for (const xml::Element& c : el.children) {
    if (c.name == "subject_name") {
      grant.subject_name = require_text(c, path + "/subject_name");
    } else if (c.name == "validity") {
      std::string vpath = path + "/validity";
      grant.validity.not_before = parse_time_element(
          require_child(c, vpath, "not_before"), vpath + "/not_before");
      grant.validity.not_after = parse_time_element(
          require_child(c, vpath, "not_after"), vpath + "/not_after");
      if (grant.validity.not_before >= grant.validity.not_after)
        fail_at(vpath, c, "not_before must precede not_after");
      saw_validity = true;
    } else if (c.name == "allow_rule" || c.name == "deny_rule") {
      std::string rpath = path + "/" + c.name + "[" + std::to_string(rule_index++) + "]";
      grant.rules.push_back(parse_rule(
          c, rpath, c.name == "allow_rule" ? Qualifier::Allow : Qualifier::Deny));
    } else if (c.name == "default") {
      std::string text = require_text(c, path + "/default");
      if (text == "ALLOW")
        grant.default_qualifier = Qualifier::Allow;
      else if (text == "DENY")
        grant.default_qualifier = Qualifier::Deny;
      else
        fail_at(path + "/default", c, "invalid default \"" + text + "\"");
      saw_default = true;
    } else {
      fail_at(path, c, "unknown element <" + c.name + ">");
    }
  }
  if (grant.subject_name.empty())
    fail_at(path, el, "missing or empty <subject_name>");
  if (!saw_validity) fail_at(path, el, "missing required element <validity>");
  if (!saw_default) grant.default_qualifier = Qualifier::Deny;
  return grant;
}

}  // namespace

PermissionsFile parse_permissions(std::string_view document) {
  xml::Element root = xml::parse_document(document);
  if (root.name != "dds") fail_at("/", root, "root element must be <dds>");
  PermissionsFile file;
  for (const auto& [k, v] : root.attributes) {
    if (k == "obfuscated") {
      if (v != kObfuscationScheme)
        fail_at("/dds", root, "unknown obfuscation scheme \"" + v + "\"");
      file.obfuscated = true;
    } else {
      fail_at("/dds", root, "unknown attribute \"" + k + "\"");
    }
  }
  const xml::Element& perms = require_child(root, "/dds", "permissions");
  std::size_t grant_index = 0;
  for (const xml::Element& c : perms.children) {
    std::string gpath =
        "/dds/permissions/grant[" + std::to_string(grant_index) + "]";
    if (c.name != "grant") fail_at(gpath, c, "unknown element <" + c.name + ">");
    file.grants.push_back(parse_grant(c, gpath));
    ++grant_index;
  }
  if (file.grants.empty())
    fail_at("/dds/permissions", perms, "document contains no grants");
  file.subject_name = file.grants.front().subject_name;
  return file;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

class Writer {
 public:
  Writer& open(std::string_view tag, std::string_view attrs = {}) {
    indent();
    out_ << '<' << tag;
    if (!attrs.empty()) out_ << ' ' << attrs;
    out_ << '>' << '\n';
    stack_.emplace_back(tag);
    return *this;
  }
  Writer& close() {
    std::string tag = stack_.back();
    stack_.pop_back();
    indent();
    out_ << "</" << tag << ">" << '\n';
    return *this;
  }
  Writer& leaf(std::string_view tag, std::string_view text) {
    indent();
    out_ << '<' << tag << '>' << xml::escape_text(text) << "</" << tag << ">"
         << '\n';
    return *this;
  }
  Writer& raw(std::string_view line) {
    indent();
    out_ << line << '\n';
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  void indent() {
    for (std::size_t i = 0; i < stack_.size(); ++i) out_ << "  ";
  }
  std::ostringstream out_;
  std::vector<std::string> stack_;
};

void write_criteria(Writer& w, std::string_view tag, const CriteriaSet& crit) {
  w.open(tag);
  w.open("topics");
  for (const auto& t : crit.topics) w.leaf("topic", t.source());
  w.close();
  if (!crit.partitions.empty()) {
    w.open("partitions");
    for (const auto& p : crit.partitions) w.leaf("partition", p.source());
    w.close();
  }
  if (!crit.data_tags.empty()) {
    w.open("data_tags");
    for (const auto& t : crit.data_tags) {
      w.open("tag");
      w.leaf("name", t.name);
      w.leaf("value", t.value);
      w.close();
    }
    w.close();
  }
  w.close();
}

}  // namespace

std::string serialize_permissions(const PermissionsFile& file) {
  Writer w;
  w.raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
  if (file.obfuscated)
    w.open("dds", "obfuscated=\"" + std::string(kObfuscationScheme) + "\"");
  else
    w.open("dds");
  w.open("permissions");
  for (const Grant& g : file.grants) {
    w.open("grant");
    w.leaf("subject_name", g.subject_name);
    w.open("validity");
    w.leaf("not_before", format_timestamp(g.validity.not_before));
    w.leaf("not_after", format_timestamp(g.validity.not_after));
    w.close();
    for (const Rule& r : g.rules) {
      w.open(r.qualifier == Qualifier::Allow ? "allow_rule" : "deny_rule");
      w.open("domains");
      for (const auto& [lo, hi] : r.domains.entries()) {
        if (lo == hi) {
          w.leaf("id", std::to_string(lo));
        } else {
          w.open("id_range");
          w.leaf("min", std::to_string(lo));
          w.leaf("max", std::to_string(hi));
          w.close();
        }
      }
      w.close();
      if (r.publish) write_criteria(w, "publish", *r.publish);
      if (r.subscribe) write_criteria(w, "subscribe", *r.subscribe);
      if (r.relay) write_criteria(w, "relay", *r.relay);
      w.close();
    }
    w.leaf("default", to_string(g.default_qualifier));
    w.close();
  }
  w.close();  // permissions
  w.close();  // dds
  return w.str();
}

// ---------------------------------------------------------------------------
// Obfuscation

std::string obfuscation_digest(std::string_view key, std::string_view text) {
  return enc::base64_encode(enc::hmac_sha256(key, text));
}

PermissionsFile obfuscate_permissions(const PermissionsFile& file,
                                      std::string_view key) {
  if (key.empty()) throw InputError("obfuscation key must be non-empty");
  if (file.obfuscated)
    throw InputError("document is already obfuscated (marker attribute present)");
  PermissionsFile out = file;
  auto digest_patterns = [&](std::vector<glob::GlobPattern>& patterns) {
    for (auto& p : patterns)
      p = glob::GlobPattern(obfuscation_digest(key, p.source()));
  };
  for (Grant& g : out.grants) {
    for (Rule& r : g.rules) {
      for (auto* crit : {&r.publish, &r.subscribe, &r.relay}) {
        if (!crit->has_value()) continue;
        digest_patterns((*crit)->topics);
        digest_patterns((*crit)->partitions);
        for (DataTag& t : (*crit)->data_tags)
          t.value = obfuscation_digest(key, t.value);
      }
    }
  }
  out.obfuscated = true;
  return out;
}

ActionRequest obfuscate_action(const ActionRequest& action, std::string_view key) {
  if (key.empty()) throw InputError("obfuscation key must be non-empty");
  ActionRequest out = action;
  out.topic = obfuscation_digest(key, action.topic);
  if (!action.partition.empty())
    out.partition = obfuscation_digest(key, action.partition);
  for (DataTag& t : out.data_tags) t.value = obfuscation_digest(key, t.value);
  out.data_tags = make_tag_set(std::move(out.data_tags));
  return out;
}

}  // namespace ddsrecon::perm
