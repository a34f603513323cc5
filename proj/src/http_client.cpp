#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "citegraph/error.hpp"
#include "citegraph/rerank.hpp"

namespace citegraph {

struct HttpChatClient::Endpoint {
  std::string scheme_host_port;
  std::string path;

  explicit Endpoint(const std::string& url);
};

HttpChatClient::Endpoint::Endpoint(const std::string& url) {
  const auto sep = url.find("://");
  if (sep == std::string::npos) throw UsageError("LLM endpoint URL has no scheme: " + url);
  const std::string scheme = url.substr(0, sep);
  if (scheme != "http" && scheme != "https") throw UsageError("unsupported LLM endpoint scheme: " + scheme);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw UsageError("https endpoints need a build with OpenSSL");
#endif
  const auto path_start = url.find('/', sep + 3);
  const std::string authority = url.substr(sep + 3, path_start == std::string::npos ? std::string::npos
                                                                                     : path_start - sep - 3);
  if (authority.empty()) throw UsageError("LLM endpoint URL has no host: " + url);
  scheme_host_port = scheme + "://" + authority;
  path = path_start == std::string::npos ? "/" : url.substr(path_start);
}

namespace {

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpClientConfig http_config_from_env() {
  HttpClientConfig config;
  const char* url = std::getenv(kLlmUrlEnv);
  if (url == nullptr || *url == '\0') {
    throw UsageError(std::string(kLlmUrlEnv) + " is not set; use --llm mock for offline runs");
  }
  config.url = url;
  if (const char* token = std::getenv(kLlmTokenEnv)) config.token = token;
  return config;
}

HttpChatClient::HttpChatClient(HttpClientConfig config)
    : config_(std::move(config)), endpoint_(std::make_unique<Endpoint>(config_.url)) {
  if (config_.retries < 0) throw UsageError("LLM retries must be >= 0");
  if (config_.timeout.count() <= 0) throw UsageError("LLM timeout must be positive");
}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::complete(const ChatRequest& request) {
  httplib::Client client(endpoint_->scheme_host_port);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  if (!config_.token.empty()) client.set_bearer_token_auth(config_.token);

  const std::string body = chat_request_json(request).dump();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
    auto res = client.Post(endpoint_->path, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return chat_response_content(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable(res->status)) break;
  }
  throw NetworkError("LLM endpoint " + config_.url + ": " + last_error);
}

}  // namespace citegraph
