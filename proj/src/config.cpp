#include "etva/config.hpp"

#include <fstream>

#include "etva/errors.hpp"

namespace etva {

namespace fs = std::filesystem;
using nlohmann::json;

TemplateSet RunConfig::templates() const {
  return template_dir ? TemplateSet::load(*template_dir) : TemplateSet::defaults();
}

qg::AgentSettings RunConfig::agent_settings() const {
  qg::AgentSettings s;
  s.templates = templates();
  s.model = llm_model;
  s.max_tokens = std::max(max_tokens, 2048);
  s.temperature = temperature;
  return s;
}

qa::QaSettings RunConfig::qa_settings() const {
  qa::QaSettings s;
  s.templates = templates();
  s.llm_model = llm_model;
  s.video_model = video_model;
  s.max_tokens = max_tokens;
  s.temperature = temperature;
  return s;
}

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ArgumentError("config key '" + key + "' has the wrong type");
  }
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ArgumentError("config key '" + key + "' " + why);
}

stats::HumanAggregator parse_aggregator(const std::string& s) {
  if (s == "mean") return stats::HumanAggregator::Mean;
  if (s == "median") return stats::HumanAggregator::Median;
  throw ArgumentError("human_aggregator must be mean or median, got '" + s + "'");
}

qg::RenderMode parse_render(const std::string& s) {
  if (s == "template") return qg::RenderMode::Template;
  if (s == "agent") return qg::RenderMode::Agent;
  throw ArgumentError("render must be template or agent, got '" + s + "'");
}

}  // namespace

RunConfig apply_config(const json& doc, RunConfig c) {
  if (!doc.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    if (key == "backend") {
      c.backend = get_as<std::string>(v, key);
    } else if (key == "endpoint_url") {
      c.http.endpoint_url = get_as<std::string>(v, key);
    } else if (key == "api_key_env") {
      c.http.api_key_env = get_as<std::string>(v, key);
    } else if (key == "max_attempts") {
      c.http.max_attempts = get_as<int>(v, key);
      require(c.http.max_attempts >= 1, key, "must be >= 1");
    } else if (key == "backoff_ms") {
      const auto ms = get_as<std::int64_t>(v, key);
      require(ms >= 0, key, "must be >= 0");
      c.http.initial_backoff = std::chrono::milliseconds(ms);
    } else if (key == "backoff_factor") {
      c.http.backoff_factor = get_as<double>(v, key);
      require(c.http.backoff_factor >= 1.0, key, "must be >= 1");
    } else if (key == "max_in_flight") {
      c.http.max_in_flight = get_as<int>(v, key);
      require(c.http.max_in_flight >= 1, key, "must be >= 1");
    } else if (key == "timeout_s") {
      const auto s = get_as<std::int64_t>(v, key);
      require(s >= 1, key, "must be >= 1");
      c.http.timeout = std::chrono::seconds(s);
    } else if (key == "llm_model") {
      c.llm_model = get_as<std::string>(v, key);
    } else if (key == "video_model") {
      c.video_model = get_as<std::string>(v, key);
    } else if (key == "max_tokens") {
      c.max_tokens = get_as<int>(v, key);
      require(c.max_tokens >= 1, key, "must be >= 1");
    } else if (key == "temperature") {
      c.temperature = get_as<double>(v, key);
      require(c.temperature >= 0.0, key, "must be >= 0");
    } else if (key == "qg_mode") {
      c.qg_mode = qg::parse_qg_mode(get_as<std::string>(v, key));
    } else if (key == "agent_builder") {
      c.agent_builder = get_as<bool>(v, key);
    } else if (key == "render") {
      c.render = parse_render(get_as<std::string>(v, key));
    } else if (key == "qa_mode") {
      c.qa_mode = qa::parse_qa_mode(get_as<std::string>(v, key));
    } else if (key == "frame_count") {
      const auto n = get_as<std::int64_t>(v, key);
      require(n >= 1, key, "must be >= 1");
      c.frame_count = static_cast<std::size_t>(n);
    } else if (key == "extractor_command") {
      c.extractor_command = get_as<std::string>(v, key);
    } else if (key == "work_dir") {
      c.work_dir = get_as<std::string>(v, key);
    } else if (key == "template_dir" && v.is_null()) {
      c.template_dir.reset();
    } else if (key == "template_dir") {
      fs::path dir = get_as<std::string>(v, key);
      if (!fs::is_directory(dir)) throw NotFoundError("template_dir does not exist: " + dir.string());
      c.template_dir = dir;
    } else if (key == "concurrency") {
      c.concurrency = get_as<int>(v, key);
      require(c.concurrency >= 1, key, "must be >= 1");
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, key);
    } else if (key == "slicing") {
      c.slicing = scoring::parse_slicing(get_as<std::string>(v, key));
    } else if (key == "human_aggregator") {
      c.human_aggregator = parse_aggregator(get_as<std::string>(v, key));
    } else {
      throw ArgumentError("unknown config key '" + key + "'");
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("config file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw ArgumentError("config " + path.string() + " is not valid JSON: " + ex.what());
  }
  // Relative paths inside the file are taken relative to the file.
  const fs::path base = path.parent_path();
  for (const char* key : {"template_dir", "work_dir"}) {
    if (doc.contains(key) && doc[key].is_string()) {
      fs::path p = doc[key].get<std::string>();
      if (p.is_relative()) doc[key] = (base / p).string();
    }
  }
  return apply_config(doc);
}

json to_json(const RunConfig& c) {
  return json{
      {"backend", c.backend},
      {"endpoint_url", c.http.endpoint_url},
      {"api_key_env", c.http.api_key_env},
      {"max_attempts", c.http.max_attempts},
      {"backoff_ms", c.http.initial_backoff.count()},
      {"backoff_factor", c.http.backoff_factor},
      {"max_in_flight", c.http.max_in_flight},
      {"timeout_s", c.http.timeout.count()},
      {"llm_model", c.llm_model},
      {"video_model", c.video_model},
      {"max_tokens", c.max_tokens},
      {"temperature", c.temperature},
      {"qg_mode", c.qg_mode == qg::QgMode::MultiAgent ? "multi_agent" : "vanilla"},
      {"agent_builder", c.agent_builder},
      {"render", c.render == qg::RenderMode::Template ? "template" : "agent"},
      {"qa_mode", std::string(qa::to_string(c.qa_mode))},
      {"frame_count", c.frame_count},
      {"extractor_command", c.extractor_command},
      {"work_dir", c.work_dir.string()},
      {"template_dir", c.template_dir ? json(c.template_dir->string()) : json(nullptr)},
      {"concurrency", c.concurrency},
      {"seed", c.seed},
      {"slicing", c.slicing == scoring::Slicing::PerQuestion ? "per_question" : "per_prompt"},
      {"human_aggregator", c.human_aggregator == stats::HumanAggregator::Mean ? "mean" : "median"},
  };
}

BackendStack make_backend(const RunConfig& c) {
  BackendStack stack;
  const std::string& spec = c.backend;
  auto arg = [&](std::string_view prefix) { return fs::path(spec.substr(prefix.size())); };
  auto need_http = [&] {
    if (c.http.endpoint_url.empty()) throw ArgumentError("backend needs endpoint_url in the config");
    stack.owned.push_back(std::make_unique<llm::HttpBackend>(c.http));
    return stack.owned.back().get();
  };

  if (spec == "http") {
    stack.top = need_http();
  } else if (spec.rfind("scripted:", 0) == 0) {
    const auto path = arg("scripted:");
    if (!fs::exists(path)) throw NotFoundError("scripted backend table not found: " + path.string());
    stack.owned.push_back(std::make_unique<llm::ScriptedBackend>(llm::ScriptedBackend::load(path)));
    stack.top = stack.owned.back().get();
  } else if (spec.rfind("replay:", 0) == 0) {
    const auto path = arg("replay:");
    if (!fs::exists(path)) throw NotFoundError("cassette not found: " + path.string());
    stack.owned.push_back(std::make_unique<llm::ReplayBackend>(path));
    stack.top = stack.owned.back().get();
  } else if (spec.rfind("record:", 0) == 0) {
    llm::Backend* live = need_http();
    stack.owned.push_back(std::make_unique<llm::ReplayBackend>(arg("record:"), live));
    stack.top = stack.owned.back().get();
  } else {
    throw ArgumentError("unknown backend '" + spec + "' (http | replay:<path> | record:<path> | scripted:<path>)");
  }
  return stack;
}

}  // namespace etva
