#include "etva/qg_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

#include "etva/text.hpp"

namespace etva::qg {

using graph::NodeKind;
using graph::SceneGraph;

// ---------------------------------------------------------------- elements

namespace {

std::string required_string(const nlohmann::json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw nlohmann::json::type_error::create(302, std::string(key) + " must be a string", &obj);
  return v.get<std::string>();
}

Category element_tag(const nlohmann::json& obj) {
  const Category c = parse_category_lenient(obj.value("fine_label", std::string{"other"}));
  // existence belongs to entities only
  return c == Category::Existence ? Category::Other : c;
}

}  // namespace

ElementSet parse_elements(const nlohmann::json& doc, std::string prompt) {
  ElementSet set;
  set.prompt = std::move(prompt);
  const std::string raw = doc.dump();
  std::set<std::string> ids;
  auto claim = [&](std::string id, std::string_view what) {
    id = text::normalize_id(id);
    if (id.empty()) throw SchemaError(std::string(what) + " with an empty id", raw);
    if (!ids.insert(id).second) throw SchemaError("duplicate element id '" + id + "'", raw);
    return id;
  };
  try {
    if (!doc.is_object()) throw SchemaError("element reply must be a JSON object", raw);
    for (const auto& e : doc.at("entities")) {
      EntityElement el{claim(required_string(e, "id"), "entity"), text::trim(e.value("label", std::string{}))};
      if (el.label.empty()) el.label = required_string(e, "id");
      set.entities.push_back(std::move(el));
    }
    std::set<std::string> entity_ids;
    for (const auto& e : set.entities) entity_ids.insert(e.id);
    auto entity_ref = [&](const nlohmann::json& obj, const char* key) {
      std::string id = text::normalize_id(required_string(obj, key));
      if (!entity_ids.contains(id)) throw SchemaError(std::string(key) + " '" + id + "' is not a declared entity", raw);
      return id;
    };
    if (doc.contains("attributes")) {
      for (const auto& a : doc.at("attributes")) {
        AttributeElement el;
        el.id = claim(required_string(a, "id"), "attribute");
        el.label = text::trim(required_string(a, "label"));
        el.fine_label = element_tag(a);
        el.owner = entity_ref(a, "entity");
        set.attributes.push_back(std::move(el));
      }
    }
    if (doc.contains("relations")) {
      for (const auto& r : doc.at("relations")) {
        RelationElement el;
        el.id = claim(required_string(r, "id"), "relation");
        el.label = text::trim(required_string(r, "label"));
        el.fine_label = element_tag(r);
        el.subject = entity_ref(r, "subject");
        el.object = entity_ref(r, "object");
        if (el.subject == el.object) throw SchemaError("relation '" + el.id + "' links an entity to itself", raw);
        set.relations.push_back(std::move(el));
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed element reply: ") + ex.what(), raw);
  }
  if (set.entities.empty()) throw SchemaError("element reply lists no entities", raw);
  return set;
}

nlohmann::json to_json(const ElementSet& s) {
  nlohmann::json ents = nlohmann::json::array(), attrs = nlohmann::json::array(), rels = nlohmann::json::array();
  for (const auto& e : s.entities) ents.push_back({{"id", e.id}, {"label", e.label}});
  for (const auto& a : s.attributes)
    attrs.push_back({{"id", a.id}, {"label", a.label}, {"fine_label", to_string(a.fine_label)}, {"entity", a.owner}});
  for (const auto& r : s.relations)
    rels.push_back({{"id", r.id},
                    {"label", r.label},
                    {"fine_label", to_string(r.fine_label)},
                    {"subject", r.subject},
                    {"object", r.object}});
  return {{"entities", ents}, {"attributes", attrs}, {"relations", rels}};
}

ElementSet extract_elements(std::string_view prompt, llm::Backend& backend, const AgentSettings& settings) {
  if (text::trim(prompt).empty()) throw ArgumentError("prompt must be nonempty");
  llm::CompletionRequest req;
  req.model_name = settings.model;
  req.max_tokens = settings.max_tokens;
  req.temperature = settings.temperature;
  req.response_hint = llm::ResponseHint::JsonObject;
  req.purpose = "extract";
  req.messages.push_back(llm::ChatMessage::text(
      llm::Role::User, text::substitute(settings.templates.element_extractor, {{"prompt", std::string(prompt)}})));
  return llm::complete_with_repair(backend, req, [&](const std::string& reply) {
    return parse_elements(llm::extract_json(reply), std::string(prompt));
  });
}

// ---------------------------------------------------------------- graph

namespace {

SceneGraph checked(SceneGraph g) {
  const auto report = graph::validate(g);
  if (!report.ok) {
    std::vector<std::string> v;
    for (const auto& viol : report.violations) v.push_back(viol.description);
    throw ConstructionError("scene graph failed validation (" + std::to_string(v.size()) + " violations)", v);
  }
  return g;
}

}  // namespace

SceneGraph build_graph(const ElementSet& elements) {
  SceneGraph g(elements.prompt);
  try {
    for (const auto& e : elements.entities) g.add_node({e.id, NodeKind::Entity, e.label, Category::Existence});
    for (const auto& a : elements.attributes) {
      g.add_node({a.id, NodeKind::Attribute, a.label, a.fine_label});
      g.add_edge(a.id, a.owner);
    }
    for (const auto& r : elements.relations) {
      g.add_node({r.id, NodeKind::Relation, r.label, r.fine_label});
      g.add_edge(r.id, r.subject);
      g.add_edge(r.id, r.object);
    }
  } catch (const ArgumentError& ex) {
    throw ConstructionError(ex.what(), {ex.what()});
  }
  return checked(std::move(g));
}

SceneGraph build_graph_agent(const ElementSet& elements, llm::Backend& backend, const AgentSettings& settings) {
  llm::CompletionRequest req;
  req.model_name = settings.model;
  req.max_tokens = settings.max_tokens;
  req.temperature = settings.temperature;
  req.response_hint = llm::ResponseHint::JsonObject;
  req.purpose = "build";
  req.messages.push_back(llm::ChatMessage::text(
      llm::Role::User, text::substitute(settings.templates.graph_builder,
                                        {{"prompt", elements.prompt}, {"elements", to_json(elements).dump()}})));
  return llm::complete_with_repair(backend, req, [&](const std::string& reply) {
    nlohmann::json doc = llm::extract_json(reply);
    if (doc.is_object()) doc["source_prompt"] = elements.prompt;
    SceneGraph g = graph::graph_from_json(doc);
    const auto report = graph::validate(g);
    if (!report.ok) throw SchemaError("graph violates constraints: " + report.violations.front().description, reply);
    return g;
  });
}

// ---------------------------------------------------------------- traversal

std::vector<QuestionSeed> traverse(const SceneGraph& g) {
  const auto report = graph::validate(g);
  if (!report.ok)
    throw ContractError("traverse needs a valid graph: " + report.violations.front().description);

  const auto ents = graph::entities(g);
  std::unordered_map<std::string, std::size_t> entity_rank;
  for (std::size_t i = 0; i < ents.size(); ++i) entity_rank.emplace(ents[i]->id, i);

  std::vector<std::vector<const graph::Node*>> groups(ents.size());
  std::vector<std::vector<const graph::Node*>> ready_after(ents.size());
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::Attribute) {
      groups[entity_rank.at(graph::attribute_owner(g, n.id))].push_back(&n);
    } else if (n.kind == NodeKind::Relation) {
      const auto ends = graph::relation_endpoints(g, n.id);
      // the relation unlocks when the later endpoint's attribute group completes
      ready_after[std::max(entity_rank.at(ends[0]), entity_rank.at(ends[1]))].push_back(&n);
    }
  }
  auto by_id = [](const graph::Node* a, const graph::Node* b) { return a->id < b->id; };

  std::vector<QuestionSeed> out;
  out.reserve(g.nodes().size());
  auto label_of = [&](const std::string& id) { return g.node(id).label; };
  for (const auto* e : ents) out.push_back({e->id, NodeKind::Entity, {e->label}});

  std::vector<const graph::Node*> ready;
  for (std::size_t i = 0; i < ents.size(); ++i) {
    std::sort(groups[i].begin(), groups[i].end(), by_id);
    for (const auto* a : groups[i]) out.push_back({a->id, NodeKind::Attribute, {a->label, ents[i]->label}});
    std::sort(ready_after[i].begin(), ready_after[i].end(), by_id);
    ready.insert(ready.end(), ready_after[i].begin(), ready_after[i].end());
  }
  for (const auto* r : ready) {
    const auto ends = graph::relation_endpoints(g, r->id);
    out.push_back({r->id, NodeKind::Relation, {r->label, label_of(ends[0]), label_of(ends[1])}});
  }
  return out;
}

// ---------------------------------------------------------------- rendering

namespace {

constexpr std::array<std::string_view, 21> kAuxiliaries = {
    "is",   "are",   "was", "were",   "am",    "does",  "do",    "did",   "can",  "could", "has",
    "have", "had",  "will", "would", "should", "shall", "may",   "might", "must", "isn't"};

constexpr std::array<std::string_view, 22> kMassNouns = {
    "water", "milk",  "coffee", "tea",   "juice", "wine",  "sand",  "snow",  "smoke", "fire",  "rain",
    "grass", "light", "fog",    "steam", "lava",  "ice",   "oil",   "mud",   "dust",  "honey", "air"};

constexpr std::array<std::string_view, 8> kPrepositions = {"towards", "across", "besides", "upwards",
                                                           "downwards", "afterwards", "as", "versus"};

constexpr std::array<std::string_view, 12> kShapeAdjectives = {
    "round", "square", "triangular", "oval", "circular", "rectangular", "spherical", "curved", "flat",
    "cubic", "cylindrical", "spiral"};

template <std::size_t N>
bool in(const std::array<std::string_view, N>& set, std::string_view w) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

std::string first_word(std::string_view s) {
  auto words = text::split_words(s);
  return words.empty() ? std::string{} : text::to_lower(words.front());
}

std::string last_word(std::string_view s) {
  auto words = text::split_words(s);
  return words.empty() ? std::string{} : text::to_lower(words.back());
}

bool is_mass_noun(std::string_view label) { return in(kMassNouns, last_word(label)); }

bool looks_plural(std::string_view label) {
  const std::string w = last_word(label);
  if (w.size() < 3 || is_mass_noun(label)) return false;
  return w.back() == 's' && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is");
}

bool has_determiner(std::string_view label) {
  static constexpr std::array<std::string_view, 9> kDet = {"a", "an", "the", "some", "two", "three", "many", "several", "one"};
  return in(kDet, first_word(label));
}

std::string indefinite(std::string_view label) {
  if (has_determiner(label) || is_mass_noun(label) || looks_plural(label)) return std::string(label);
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(label.empty() ? 'x' : label.front())));
  const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  return std::string(vowel ? "an " : "a ") + std::string(label);
}

std::string definite(std::string_view label) {
  if (has_determiner(label)) return std::string(label);
  return "the " + std::string(label);
}

std::string pluralize(std::string_view noun) {
  std::string w(noun);
  if (looks_plural(w)) return w;
  if (w.ends_with("s") || w.ends_with("x") || w.ends_with("ch") || w.ends_with("sh")) return w + "es";
  if (w.size() > 1 && w.back() == 'y' && std::string_view("aeiou").find(w[w.size() - 2]) == std::string_view::npos)
    return w.substr(0, w.size() - 1) + "ies";
  return w + "s";
}

constexpr std::array<std::string_view, 34> kCopularOpeners = {
    "in", "on", "at", "by", "near", "under", "over", "above", "below", "beneath", "behind", "beside", "between",
    "inside", "outside", "within", "into", "onto", "from", "with", "without", "next", "left", "right", "close",
    "part", "full", "made", "covered", "filled", "surrounded", "attached", "upside", "together"};

// Verb phrase for a "Does ..." question: "stands on" -> "stand on", "stand on"
// unchanged. nullopt when the label reads as a predicate after "is" (a
// participle, preposition or adjective: "pouring from", "contained within").
std::optional<std::string> base_form(std::string_view label) {
  auto words = text::split_words(label);
  if (words.empty()) return std::nullopt;
  std::string w = text::to_lower(words.front());
  if (in(kCopularOpeners, w) || w.ends_with("ing") || w.ends_with("ed") || w.size() < 2) return std::nullopt;
  const bool third_person = w.size() >= 3 && w.back() == 's' && !w.ends_with("ss") && !w.ends_with("us") &&
                            !w.ends_with("is") && !in(kPrepositions, w);
  if (!third_person && in(kPrepositions, w)) return std::nullopt;
  if (third_person) {
    if (w.ends_with("ches") || w.ends_with("shes") || w.ends_with("sses") || w.ends_with("xes") ||
        w.ends_with("zes") || w.ends_with("oes")) {
      w.resize(w.size() - 2);
    } else if (w.ends_with("ies") && w.size() > 4) {
      w = w.substr(0, w.size() - 3) + "y";
    } else {
      w.pop_back();
    }
  }
  words.front() = w;
  std::string out;
  for (const auto& part : words) {
    if (!out.empty()) out.push_back(' ');
    out += part;
  }
  return out;
}

// "Is {subject} {label}?" or "Does {subject} {base}?" with an optional tail.
std::string predicate_question(const std::string& subject, std::string_view label, const std::string& tail) {
  const std::string suffix = tail.empty() ? "?" : " " + tail + "?";
  if (auto base = base_form(label)) return "Does " + subject + " " + *base + suffix;
  return "Is " + subject + " " + std::string(label) + suffix;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string attribute_question(const graph::Node& attr, const graph::Node& owner) {
  const std::string& label = attr.label;
  const std::string subject = definite(owner.label);
  switch (attr.fine_label) {
    case Category::Material:
      return "Is " + subject + " made of " + label + "?";
    case Category::Color:
      return "Is " + subject + " " + label + "?";
    case Category::Shape:
      if (first_word(label) == "shaped" || in(kShapeAdjectives, first_word(label)))
        return "Is " + subject + " " + label + "?";
      return "Is " + subject + " shaped like " + indefinite(label) + "?";
    case Category::Number:
      if (first_word(label) == "one" || label == "1" || label == "a single")
        return "Is there exactly one " + owner.label + " in the video?";
      return "Are there " + label + " " + pluralize(owner.label) + " in the video?";
    case Category::Camera:
      return predicate_question("the camera", label, "");
    case Category::Other:
      if (last_word(label) == "style") return "Is the video in " + definite(label) + "?";
      return predicate_question(subject, label, "");
    default:
      return predicate_question(subject, label, "");
  }
}

}  // namespace

bool is_yes_no_question(std::string_view q) {
  const std::string t = text::trim(q);
  if (t.size() < 4 || t.back() != '?') return false;
  return in(kAuxiliaries, first_word(t));
}

std::string render_seed(const QuestionSeed& seed, const SceneGraph& g) {
  const graph::Node& node = g.node(seed.node_id);
  switch (seed.kind) {
    case NodeKind::Entity:
      if (looks_plural(node.label)) return "Are there " + node.label + " in the video?";
      return "Is there " + indefinite(node.label) + " in the video?";
    case NodeKind::Attribute:
      return attribute_question(node, g.node(graph::attribute_owner(g, node.id)));
    case NodeKind::Relation: {
      const auto ends = graph::relation_endpoints(g, node.id);
      const std::string& subj = g.node(ends[0]).label;
      const std::string subject = is_mass_noun(subj) ? subj : definite(subj);
      return capitalize(predicate_question(subject, node.label, definite(g.node(ends[1]).label)));
    }
  }
  return {};
}

std::string question_id(std::string_view prompt_id, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_q%02zu", ordinal);
  return std::string(prompt_id) + buf;
}

namespace {

AtomicQuestion make_question(const QuestionSeed& seed, const SceneGraph& g, std::string_view prompt_id,
                             std::size_t ordinal, std::string text) {
  return AtomicQuestion{question_id(prompt_id, ordinal), std::string(prompt_id), std::move(text),
                        g.node(seed.node_id).fine_label, seed.node_id, g.source_prompt()};
}

std::map<std::string, std::string> parse_agent_questions(const std::string& reply,
                                                         const std::vector<QuestionSeed>& seeds) {
  const nlohmann::json doc = llm::extract_json(reply);
  if (!doc.is_array()) throw SchemaError("traverser reply must be a JSON list", reply);
  std::set<std::string> wanted;
  for (const auto& s : seeds) wanted.insert(s.node_id);
  std::map<std::string, std::string> got;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("node_id") || !item.contains("question")) continue;
    if (!item["node_id"].is_string() || !item["question"].is_string()) continue;
    const std::string id = text::normalize_id(item["node_id"].get<std::string>());
    const std::string q = text::trim(item["question"].get<std::string>());
    if (wanted.contains(id) && is_yes_no_question(q)) got.emplace(id, q);
  }
  return got;
}

}  // namespace

RenderOutcome render_questions(const std::vector<QuestionSeed>& seeds, const SceneGraph& g,
                               std::string_view prompt_id, RenderMode mode, llm::Backend* backend,
                               const AgentSettings& settings) {
  RenderOutcome out;
  std::map<std::string, std::string> agent;
  if (mode == RenderMode::Agent) {
    if (backend == nullptr) throw ArgumentError("agent rendering needs a backend");
    nlohmann::json listing = nlohmann::json::array();
    for (const auto& s : seeds)
      listing.push_back({{"node_id", s.node_id}, {"kind", graph::to_string(s.kind)}, {"context", s.context}});
    llm::CompletionRequest req;
    req.model_name = settings.model;
    req.max_tokens = settings.max_tokens;
    req.temperature = settings.temperature;
    req.response_hint = llm::ResponseHint::JsonObject;
    req.purpose = "traverse";
    req.messages.push_back(llm::ChatMessage::text(
        llm::Role::User, text::substitute(settings.templates.graph_traverser,
                                          {{"prompt", g.source_prompt()}, {"seeds", listing.dump()}})));
    try {
      agent = llm::complete_with_repair(*backend, req, [&](const std::string& reply) {
        auto parsed = parse_agent_questions(reply, seeds);
        if (parsed.size() != seeds.size())
          throw SchemaError("traverser covered " + std::to_string(parsed.size()) + " of " +
                                std::to_string(seeds.size()) + " nodes with valid yes/no questions",
                            reply);
        return parsed;
      });
    } catch (const SchemaError& err) {
      // keep whatever the last reply got right
      try {
        agent = parse_agent_questions(err.raw(), seeds);
      } catch (const SchemaError&) {
        agent.clear();
      }
      out.warnings.push_back(std::string("traverser fallback to templates: ") + err.what());
    }
  }
  std::size_t ordinal = 1;
  for (const auto& seed : seeds) {
    auto it = agent.find(seed.node_id);
    std::string text = it != agent.end() ? it->second : render_seed(seed, g);
    out.questions.push_back(make_question(seed, g, prompt_id, ordinal++, std::move(text)));
  }
  return out;
}

std::vector<AtomicQuestion> vanilla_questions(std::string_view prompt, std::string_view prompt_id,
                                              llm::Backend& backend, const AgentSettings& settings) {
  if (text::trim(prompt).empty()) throw ArgumentError("prompt must be nonempty");
  llm::CompletionRequest req;
  req.model_name = settings.model;
  req.max_tokens = settings.max_tokens;
  req.temperature = settings.temperature;
  req.response_hint = llm::ResponseHint::JsonObject;
  req.purpose = "vanilla_qg";
  req.messages.push_back(llm::ChatMessage::text(
      llm::Role::User, text::substitute(settings.templates.vanilla_qg, {{"prompt", std::string(prompt)}})));
  return llm::complete_with_repair(backend, req, [&](const std::string& reply) {
    const nlohmann::json doc = llm::extract_json(reply);
    const nlohmann::json& list = doc.is_object() && doc.contains("questions") ? doc["questions"] : doc;
    if (!list.is_array()) throw SchemaError("vanilla reply must be a JSON list", reply);
    std::vector<AtomicQuestion> out;
    for (const auto& item : list) {
      if (!item.is_object() || !item.contains("question") || !item["question"].is_string()) continue;
      const std::string q = text::trim(item["question"].get<std::string>());
      if (!is_yes_no_question(q)) continue;
      const std::string tag = item.contains("category") && item["category"].is_string()
                                  ? item["category"].get<std::string>()
                                  : std::string("other");
      out.push_back(AtomicQuestion{question_id(prompt_id, out.size() + 1), std::string(prompt_id), q,
                                   parse_category_lenient(tag), "", std::string(prompt)});
    }
    if (out.empty()) throw SchemaError("vanilla reply contains no yes/no questions", reply);
    return out;
  });
}

nlohmann::json to_json(const AtomicQuestion& q) {
  return {{"question_id", q.question_id},
          {"prompt_id", q.prompt_id},
          {"text", q.text},
          {"category", to_string(q.category)},
          {"source_node_id", q.source_node_id}};
}

AtomicQuestion question_from_json(const nlohmann::json& doc) {
  try {
    AtomicQuestion q;
    q.question_id = doc.at("question_id").get<std::string>();
    q.prompt_id = doc.at("prompt_id").get<std::string>();
    q.text = doc.at("text").get<std::string>();
    const auto tag = doc.at("category").get<std::string>();
    auto c = parse_category(tag);
    if (!c) throw SchemaError("unknown category '" + tag + "'", doc.dump());
    q.category = *c;
    q.source_node_id = doc.value("source_node_id", std::string{});
    return q;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed question: ") + ex.what(), doc.dump());
  }
}

QgMode parse_qg_mode(std::string_view s) {
  if (s == "multi_agent") return QgMode::MultiAgent;
  if (s == "vanilla") return QgMode::Vanilla;
  throw ArgumentError("unknown qg mode '" + std::string(s) + "' (multi_agent|vanilla)");
}

QgResult generate(std::string_view prompt_id, std::string_view prompt, llm::Backend& backend,
                  const AgentSettings& settings, const QgOptions& options) {
  QgResult r;
  r.prompt_id = std::string(prompt_id);
  if (options.mode == QgMode::Vanilla) {
    r.elements.prompt = std::string(prompt);
    r.graph = SceneGraph(std::string(prompt));
    r.questions = vanilla_questions(prompt, prompt_id, backend, settings);
    return r;
  }
  r.elements = extract_elements(prompt, backend, settings);
  r.graph = options.agent_builder ? build_graph_agent(r.elements, backend, settings) : build_graph(r.elements);
  const auto seeds = traverse(r.graph);
  auto rendered = render_questions(seeds, r.graph, prompt_id, options.render, &backend, settings);
  r.questions = std::move(rendered.questions);
  r.warnings = std::move(rendered.warnings);
  return r;
}

}  // namespace etva::qg
