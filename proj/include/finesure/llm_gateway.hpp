// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace finesure::llm {

// Credentials are read from this variable only.
inline constexpr const char* kApiKeyEnvVar = "FINESURE_API_KEY";

enum class BackendKind { kOpenAiCompatibleHttp, kMockReplay };

struct BackendConfig {
  BackendKind kind = BackendKind::kMockReplay;
  std::string endpoint_url;  // e.g. https://api.openai.com/v1
  std::string model_name = "mock";
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::chrono::milliseconds request_timeout{120000};
  int max_retries = 2;
  int parallelism = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::chrono::milliseconds retry_base_delay{500};
  std::optional<std::filesystem::path> mock_fixtures;
  // Prompts longer than this (in characters) are flagged, never truncated.
  std::size_t long_prompt_chars = 32000;
  std::string api_key;  // filled from kApiKeyEnvVar, never from flags
};

// Throws kConfig with an actionable message.
void validate(const BackendConfig& config);

struct CompletionRequest {
  std::string instance_id;
  std::string task;
  std::string prompt;
};

enum class TransportStatus { kOk, kTransportError };

struct CompletionResult {
  std::string instance_id;
  std::string task;
  std::string raw_text;  // byte-exact reply
  TransportStatus status = TransportStatus::kOk;
  std::string error_detail;
  std::chrono::milliseconds latency{0};
  bool from_cache = false;
  int attempts = 0;
  std::size_t prompt_chars = 0;
  bool long_prompt = false;

  bool ok() const noexcept { return status == TransportStatus::kOk; }
};

// What one attempt against a backend produced.
struct BackendReply {
  bool ok = false;
  bool retryable = false;
  std::string text;
  std::string error;
};

// A completion backend. Implementations must be safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply send(const CompletionRequest& request, const BackendConfig& config) = 0;
};

// Replays canned replies. Lookup is by SHA-256 of the prompt text first,
// then by (instance_id, task). Unknown prompts are non-retryable errors.
class MockReplayBackend : public Backend {
 public:
  MockReplayBackend() = default;

  // JSONL rows: {"prompt_sha256"| "instance_id"+"task", "response" | "error"}.
  static std::shared_ptr<MockReplayBackend> from_file(const std::filesystem::path& path);

  void add_for_prompt(const std::string& prompt, std::string response);
  void add_for_instance(const std::string& instance_id, const std::string& task, std::string response);
  void add_error_for_instance(const std::string& instance_id, const std::string& task, std::string error);

  BackendReply send(const CompletionRequest& request, const BackendConfig& config) override;

 private:
  std::map<std::string, BackendReply> by_hash_;
  std::map<std::pair<std::string, std::string>, BackendReply> by_instance_;
};

// OpenAI-compatible chat completions over HTTP(S).
class HttpBackend : public Backend {
 public:
  BackendReply send(const CompletionRequest& request, const BackendConfig& config) override;
};

// One file per key: <hex>.txt holds the raw reply, <hex>.json the sidecar.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  // Hex digest over prompt hash, model name and temperature.
  static std::string key(const std::string& prompt, const std::string& model, double temperature);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& raw_text, const std::string& model,
           double temperature) const;

 private:
  std::filesystem::path dir_;
};

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

class Gateway {
 public:
  Gateway(BackendConfig config, std::shared_ptr<Backend> backend);
  explicit Gateway(BackendConfig config);

  const BackendConfig& config() const noexcept { return config_; }

  // Single-turn request with retries on retryable failures and exponential
  // backoff; cached replies come back with from_cache = true.
  CompletionResult complete(const CompletionRequest& request) const;

  // At most `parallelism` requests in flight; results in input order.
  std::vector<CompletionResult> complete_batch(std::span<const CompletionRequest> requests) const;

 private:
  BackendConfig config_;
  std::shared_ptr<Backend> backend_;
  std::optional<ResponseCache> cache_;
};

}  // namespace finesure::llm
