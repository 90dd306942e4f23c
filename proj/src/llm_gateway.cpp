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

#include "finesure/llm_gateway.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "finesure/error.hpp"
#include "finesure/ingest.hpp"
#include "finesure/text_util.hpp"

namespace finesure::llm {

using nlohmann::json;

namespace {

struct ParsedEndpoint {
  std::string scheme_host_port;
  std::string path;  // full chat-completions path
};

ParsedEndpoint parse_endpoint(const std::string& url) {
  static const std::regex kUrl(R"(^(https?)://([A-Za-z0-9.\-_]+|\[[0-9A-Fa-f:]+\])(:([0-9]{1,5}))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw Error(ErrorCode::kConfig,
                "endpoint \"" + url + "\" is not an http(s) URL such as https://api.openai.com/v1");
  }
  ParsedEndpoint out;
  out.scheme_host_port = m[1].str() + "://" + m[2].str();
  if (m[4].matched) out.scheme_host_port += ":" + m[4].str();
  std::string path = m[5].matched ? m[5].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  const std::string suffix = "/chat/completions";
  if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0)
    path += suffix;
  out.path = path;
  return out;
}

}  // namespace

void validate(const BackendConfig& config) {
  if (config.parallelism < 1) throw Error(ErrorCode::kConfig, "parallelism must be >= 1");
  if (config.max_retries < 0) throw Error(ErrorCode::kConfig, "max retries must be >= 0");
  if (config.temperature < 0.0) throw Error(ErrorCode::kConfig, "temperature must be >= 0");
  if (config.max_output_tokens < 1) throw Error(ErrorCode::kConfig, "max output tokens must be >= 1");
  if (config.model_name.empty()) throw Error(ErrorCode::kConfig, "model name is required");
  if (config.kind == BackendKind::kOpenAiCompatibleHttp) {
    if (config.endpoint_url.empty())
      throw Error(ErrorCode::kConfig, "the openai backend needs an endpoint URL");
    parse_endpoint(config.endpoint_url);
  }
}

// ---------------------------------------------------------------------------
// Mock replay

std::shared_ptr<MockReplayBackend> MockReplayBackend::from_file(const std::filesystem::path& path) {
  auto backend = std::make_shared<MockReplayBackend>();
  ingest::read_jsonl(path, [&](std::size_t line, const json& row) {
    BackendReply reply;
    if (row.contains("response") && row["response"].is_string()) {
      reply.ok = true;
      reply.text = row["response"].get<std::string>();
    } else if (row.contains("error") && row["error"].is_string()) {
      reply.error = row["error"].get<std::string>();
    } else {
      throw Error(ErrorCode::kSchema, path.string() + " line " + std::to_string(line) +
                                          ": fixture needs a \"response\" or \"error\" string");
    }
    if (row.contains("prompt_sha256") && row["prompt_sha256"].is_string()) {
      backend->by_hash_[row["prompt_sha256"].get<std::string>()] = reply;
    } else if (row.contains("instance_id") && row.contains("task") && row["instance_id"].is_string() &&
               row["task"].is_string()) {
      backend->by_instance_[{row["instance_id"].get<std::string>(), row["task"].get<std::string>()}] = reply;
    } else {
      throw Error(ErrorCode::kSchema, path.string() + " line " + std::to_string(line) +
                                          ": fixture needs \"prompt_sha256\" or \"instance_id\"+\"task\"");
    }
  });
  return backend;
}

void MockReplayBackend::add_for_prompt(const std::string& prompt, std::string response) {
  by_hash_[sha256_hex(prompt)] = BackendReply{true, false, std::move(response), {}};
}

void MockReplayBackend::add_for_instance(const std::string& instance_id, const std::string& task,
                                         std::string response) {
  by_instance_[{instance_id, task}] = BackendReply{true, false, std::move(response), {}};
}

void MockReplayBackend::add_error_for_instance(const std::string& instance_id, const std::string& task,
                                               std::string error) {
  by_instance_[{instance_id, task}] = BackendReply{false, false, {}, std::move(error)};
}

BackendReply MockReplayBackend::send(const CompletionRequest& request, const BackendConfig&) {
  if (const auto it = by_hash_.find(sha256_hex(request.prompt)); it != by_hash_.end()) return it->second;
  if (const auto it = by_instance_.find({request.instance_id, request.task}); it != by_instance_.end())
    return it->second;
  return BackendReply{false, false, {},
                      "no mock fixture for instance \"" + request.instance_id + "\" task \"" +
                          request.task + "\""};
}

// ---------------------------------------------------------------------------
// HTTP

BackendReply HttpBackend::send(const CompletionRequest& request, const BackendConfig& config) {
  const ParsedEndpoint endpoint = parse_endpoint(config.endpoint_url);
  httplib::Client client(endpoint.scheme_host_port);
  const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config.request_timeout);
  const auto timeout_us =
      std::chrono::duration_cast<std::chrono::microseconds>(config.request_timeout - timeout_s);
  client.set_connection_timeout(timeout_s.count(), timeout_us.count());
  client.set_read_timeout(timeout_s.count(), timeout_us.count());
  client.set_write_timeout(timeout_s.count(), timeout_us.count());

  httplib::Headers headers;
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

  const json body = {
      {"model", config.model_name},
      {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", config.temperature},
      {"max_tokens", config.max_output_tokens},
  };
  const auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
  if (!res) return BackendReply{false, true, {}, "transport: " + httplib::to_string(res.error())};
  if (res->status >= 500 || res->status == 429) {
    return BackendReply{false, true, {}, "HTTP " + std::to_string(res->status)};
  }
  if (res->status >= 400) {
    // Terminal: bad key, bad model name, malformed request.
    return BackendReply{false, false, {},
                        "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300)};
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty()) {
    return BackendReply{false, false, {}, "response body is not a chat completion"};
  }
  const json& message = reply["choices"][0].value("message", json::object());
  if (!message.contains("content") || !message["content"].is_string()) {
    // A null content is an empty reply, which the parser classifies.
    return BackendReply{true, false, "", {}};
  }
  return BackendReply{true, false, message["content"].get<std::string>(), {}};
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
  validate(config);
  if (config.kind == BackendKind::kOpenAiCompatibleHttp) return std::make_shared<HttpBackend>();
  if (config.mock_fixtures) return MockReplayBackend::from_file(*config.mock_fixtures);
  return std::make_shared<MockReplayBackend>();
}

// ---------------------------------------------------------------------------
// Cache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create cache directory " + dir_.string());
}

std::string ResponseCache::key(const std::string& prompt, const std::string& model, double temperature) {
  char temp[32];
  std::snprintf(temp, sizeof(temp), "%.6f", temperature);
  return sha256_hex("finesure-cache-v1\n" + sha256_hex(prompt) + "\n" + model + "\n" + temp);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

void write_atomically(const std::filesystem::path& target, const std::string& content) {
  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << target.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << counter++;
  const auto tmp = target.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write cache file " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorCode::kIo, "cannot write cache file " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move cache file into place: " + target.string());
  }
}

}  // namespace

void ResponseCache::put(const std::string& key, const std::string& raw_text, const std::string& model,
                        double temperature) const {
  // Sidecar first, so a visible .txt always has its metadata.
  const json sidecar = {{"model", model},
                        {"temperature", temperature},
                        {"timestamp", static_cast<long long>(std::time(nullptr))}};
  write_atomically(dir_ / (key + ".json"), sidecar.dump());
  write_atomically(dir_ / (key + ".txt"), raw_text);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(BackendConfig config, std::shared_ptr<Backend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  validate(config_);
  if (!backend_) throw Error(ErrorCode::kConfig, "no backend");
  if (config_.cache_dir) cache_.emplace(*config_.cache_dir);
}

Gateway::Gateway(BackendConfig config) : Gateway(config, make_backend(config)) {}

CompletionResult Gateway::complete(const CompletionRequest& request) const {
  CompletionResult result;
  result.instance_id = request.instance_id;
  result.task = request.task;
  result.prompt_chars = request.prompt.size();
  result.long_prompt = request.prompt.size() > config_.long_prompt_chars;

  const auto started = std::chrono::steady_clock::now();
  std::string cache_key;
  if (cache_) {
    cache_key = ResponseCache::key(request.prompt, config_.model_name, config_.temperature);
    if (auto hit = cache_->get(cache_key)) {
      result.raw_text = std::move(*hit);
      result.from_cache = true;
      return result;
    }
  }

  BackendReply reply;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.retry_base_delay.count() > 0) {
      std::this_thread::sleep_for(config_.retry_base_delay * (1LL << std::min(attempt - 1, 10)));
    }
    ++result.attempts;
    reply = backend_->send(request, config_);
    if (reply.ok || !reply.retryable) break;
  }
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  if (!reply.ok) {
    result.status = TransportStatus::kTransportError;
    result.error_detail = reply.error;
    return result;
  }
  result.raw_text = std::move(reply.text);
  if (cache_) cache_->put(cache_key, result.raw_text, config_.model_name, config_.temperature);
  return result;
}

std::vector<CompletionResult> Gateway::complete_batch(std::span<const CompletionRequest> requests) const {
  std::vector<CompletionResult> results(requests.size());
  auto run_one = [&](std::size_t i) {
    try {
      results[i] = complete(requests[i]);
    } catch (const std::exception& e) {
      // Cache I/O trouble on one item must not sink the batch.
      results[i] = CompletionResult{};
      results[i].instance_id = requests[i].instance_id;
      results[i].task = requests[i].task;
      results[i].status = TransportStatus::kTransportError;
      results[i].error_detail = e.what();
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config_.parallelism), requests.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) run_one(i);
      });
    }
  }
  return results;
}

}  // namespace finesure::llm
