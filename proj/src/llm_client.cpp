#include "eqdisc/llm_client.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "eqdisc/error.hpp"
#include "eqdisc/parser.hpp"

namespace eqdisc {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  Endpoint ep{url.substr(0, slash), slash == std::string::npos ? std::string() : url.substr(slash)};
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

void set_timeouts(httplib::Client& cli, double seconds) {
  const auto sec = static_cast<time_t>(seconds);
  const auto usec = static_cast<time_t>((seconds - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

httplib::Headers auth_headers(const LlmEndpointConfig& cfg) {
  httplib::Headers h;
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
      h.emplace("Authorization", std::string("Bearer ") + key);
  }
  return h;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n`");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n`");
  return std::string(s.substr(b, e - b + 1));
}

// "y = p0*x" -> "p0*x"; "f(x) = ..." likewise.
std::string drop_lhs(const std::string& line) {
  const auto eq = line.rfind('=');
  return eq == std::string::npos ? line : trim(std::string_view(line).substr(eq + 1));
}

bool parses(const std::string& text, const std::vector<std::string>& vars) {
  if (text.empty()) return false;
  try {
    if (vars.empty())
      parse_free(text);
    else
      parse(text, vars);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<std::string> lines_of(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    out.push_back(trim(s.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  return out;
}

bool is_word(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '+';
  });
}

}  // namespace

void LlmEndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("backend.base_url is empty");
  if (model_name.empty()) throw ConfigError("backend.model is empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("backend.temperature must lie in [0, 2]");
  if (max_tokens <= 0) throw ConfigError("backend.max_tokens must be positive");
  if (!(timeout_s > 0.0)) throw ConfigError("backend.timeout must be positive");
  if (retries < 0 || retries > 5) throw ConfigError("backend.retries must lie in [0, 5]");
  if (backoff_ms < 0) throw ConfigError("backend.backoff_ms must be non-negative");
  if (max_concurrent < 1) throw ConfigError("backend.max_concurrent must be at least 1");
}

std::string llm_complete(const LlmEndpointConfig& cfg, const std::string& prompt) {
  const Endpoint ep = split_url(cfg.base_url);
  httplib::Client cli(ep.origin);
  set_timeouts(cli, cfg.timeout_s);
  const nlohmann::json body = {
      {"model", cfg.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg.temperature},
      {"max_tokens", cfg.max_tokens},
  };
  const std::string payload = body.dump();
  const auto headers = auth_headers(cfg);
  const std::string path = ep.prefix + "/v1/chat/completions";

  std::string last;
  int attempts = 0;
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    if (attempt > 0) {
      const auto delay = static_cast<long long>(cfg.backoff_ms) << (attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    ++attempts;
    auto res = cli.Post(path, headers, payload, "application/json");
    if (!res) {
      last = "request to " + cfg.base_url + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last = "server answered " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) throw HttpStatusError(res->status);

    const auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) throw EmptyCompletion("completion response is not valid JSON");
    const auto* content = [&]() -> const nlohmann::json* {
      if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) return nullptr;
      const auto& c = doc["choices"][0];
      if (!c.contains("message") || !c["message"].contains("content")) return nullptr;
      return &c["message"]["content"];
    }();
    if (!content || !content->is_string() || content->get_ref<const std::string&>().empty())
      throw EmptyCompletion("completion has no message content");
    return content->get<std::string>();
  }
  throw TransportError(last, attempts);
}

bool llm_health(const LlmEndpointConfig& cfg) {
  const Endpoint ep = split_url(cfg.base_url);
  httplib::Client cli(ep.origin);
  set_timeouts(cli, cfg.timeout_s);
  auto res = cli.Get(ep.prefix + "/v1/models", auth_headers(cfg));
  return res && res->status >= 200 && res->status < 300;
}

std::string extract_expression(const std::string& completion, const std::vector<std::string>& var_names) {
  const auto open = completion.find("```");
  if (open != std::string::npos) {
    const auto close = completion.find("```", open + 3);
    std::string_view body = std::string_view(completion).substr(
        open + 3, close == std::string::npos ? std::string::npos : close - open - 3);
    auto lines = lines_of(body);
    // A language tag on the opening fence line ("```python"). Without a
    // schema every word parses, so only a known variable survives.
    const bool known_var = std::find(var_names.begin(), var_names.end(), lines.front()) != var_names.end();
    if (lines.size() > 1 && is_word(lines.front()) && !known_var) lines.erase(lines.begin());
    std::string first;
    for (const auto& l : lines) {
      if (l.empty()) continue;
      if (first.empty()) first = drop_lhs(l);
      if (parses(drop_lhs(l), var_names)) return drop_lhs(l);
    }
    if (!first.empty()) return first;
  }
  for (const auto& l : lines_of(completion)) {
    const auto candidate = drop_lhs(l);
    if (parses(candidate, var_names)) return candidate;
  }
  throw NoExpressionFound("no expression found in completion");
}

LlmClient::LlmClient(LlmEndpointConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::string LlmClient::complete(const std::string& prompt, double temperature) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < cfg_.max_concurrent; });
    ++in_flight_;
  }
  struct Release {
    LlmClient* c;
    ~Release() {
      {
        std::lock_guard lock(c->mu_);
        --c->in_flight_;
      }
      c->cv_.notify_one();
    }
  } release{this};
  LlmEndpointConfig cfg = cfg_;
  cfg.temperature = temperature;
  return llm_complete(cfg, prompt);
}

bool LlmClient::health() { return llm_health(cfg_); }

std::string LlmGenerator::ask(std::string prompt, const ProblemSpec& spec, const ProposalRequest& req) {
  if (!req.feedback.empty())
    prompt += "\nYour previous answer was rejected: " + req.feedback + "\nFix it and answer again.\n";
  return extract_expression(client_.complete(prompt, temperature_), spec.var_names);
}

std::string LlmGenerator::initial(const ProblemSpec& spec, const Hypothesis& hyp, const ProposalRequest& req) {
  const PromptBindings b = {
      {"PROBLEM_SPEC", describe_problem(spec)},
      {"HYPOTHESIS", hyp.skeleton_text},
      {"GRAMMAR_REFERENCE", grammar_reference()},
  };
  return ask(render_prompt(builtin_template(PromptKind::initial_generation), b), spec, req);
}

std::string LlmGenerator::revise(const ProblemSpec& spec, const AgentState& self, const CollectiveKnowledge* ck,
                                 UpdateDirection direction, const ProposalRequest& req) {
  std::string current = serialize(self.expr);
  if (!self.params.empty()) {
    current += "\nfitted parameters:";
    for (std::size_t i = 0; i < self.params.size(); ++i)
      current += " p" + std::to_string(i) + "=" + format_number(self.params[i]);
  }
  const PromptBindings b = {
      {"PROBLEM_SPEC", describe_problem(spec)},
      {"CURRENT_EXPR", current},
      {"BEST_EQUATION", ck ? ck->f_best_text : std::string("(not shared)")},
      {"ANALYSIS", ck ? ck->analysis_text : std::string("(not shared)")},
      {"UPDATE_DIRECTION", std::string(direction_name(direction))},
      {"GRAMMAR_REFERENCE", grammar_reference()},
  };
  return ask(render_prompt(builtin_template(PromptKind::ast_update), b), spec, req);
}

std::string LlmAnalyst::analyze(const std::string& f_best_text, const std::string& domain_tag) {
  const PromptBindings b = {
      {"DOMAIN", domain_tag},
      {"PROBLEM_SPEC", describe_problem(spec_)},
      {"BEST_EQUATION", f_best_text},
  };
  return client_.complete(render_prompt(builtin_template(PromptKind::program_analysis), b), temperature_);
}

}  // namespace eqdisc
