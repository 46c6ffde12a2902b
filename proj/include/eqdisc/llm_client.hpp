#pragma once

#include <condition_variable>
#include <mutex>
#include <string>
#include <vector>

#include "eqdisc/agent.hpp"
#include "eqdisc/prompts.hpp"

namespace eqdisc {

struct LlmEndpointConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string model_name = "mixtral:8x7b";
  double temperature = 0.8;
  int max_tokens = 512;
  double timeout_s = 120.0;
  int retries = 3;
  std::string api_key_env = "EQDISC_API_KEY";
  // Delay before retry n (1-based) is backoff_ms * 2^(n-1).
  int backoff_ms = 1000;
  int max_concurrent = 4;

  // Throws ConfigError.
  void validate() const;
};

// One chat-completion request with retries on transport failures and 5xx.
// Throws TransportError, HttpStatusError (4xx) or EmptyCompletion.
std::string llm_complete(const LlmEndpointConfig& cfg, const std::string& prompt);

// GET {base_url}/v1/models answered with 2xx.
bool llm_health(const LlmEndpointConfig& cfg);

// Pulls a single expression out of model output: the first fenced block,
// else the first line that parses. A leading "y =" is dropped. When
// var_names is empty any identifier is accepted as a variable.
// Throws NoExpressionFound.
std::string extract_expression(const std::string& completion, const std::vector<std::string>& var_names = {});

// Shares one endpoint between generator and analyst and caps the number of
// requests in flight.
class LlmClient {
 public:
  explicit LlmClient(LlmEndpointConfig cfg);

  std::string complete(const std::string& prompt, double temperature);
  bool health();
  const LlmEndpointConfig& config() const noexcept { return cfg_; }

 private:
  LlmEndpointConfig cfg_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

class LlmGenerator final : public GeneratorBackend {
 public:
  explicit LlmGenerator(LlmClient& client, double temperature = 0.8) : client_(client), temperature_(temperature) {}

  std::string initial(const ProblemSpec& spec, const Hypothesis& hyp, const ProposalRequest& req) override;
  std::string revise(const ProblemSpec& spec, const AgentState& self, const CollectiveKnowledge* ck,
                     UpdateDirection direction, const ProposalRequest& req) override;
  bool health() override { return client_.health(); }

 private:
  std::string ask(std::string prompt, const ProblemSpec& spec, const ProposalRequest& req);

  LlmClient& client_;
  double temperature_;
};

class LlmAnalyst final : public AnalystBackend {
 public:
  LlmAnalyst(LlmClient& client, ProblemSpec spec, double temperature = 0.3)
      : client_(client), spec_(std::move(spec)), temperature_(temperature) {}

  std::string analyze(const std::string& f_best_text, const std::string& domain_tag) override;
  bool health() override { return client_.health(); }

 private:
  LlmClient& client_;
  ProblemSpec spec_;
  double temperature_;
};

}  // namespace eqdisc
