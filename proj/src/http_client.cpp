// Copyright 2026 The Scramble Authors.
//
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

#include "scramble/http_client.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "scramble/errors.hpp"

namespace scramble {
namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

JsonHttpClient::JsonHttpClient(std::string base_url, HttpOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  auto scheme_end = base_url_.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint_url", "missing scheme in '" + base_url_ + "'");
  }
  const std::string scheme = base_url_.substr(0, scheme_end);
  if (scheme != "http") {
    throw ConfigError("endpoint_url",
                      "unsupported scheme '" + scheme + "' (only http)");
  }
  auto path_start = base_url_.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = base_url_;
  } else {
    scheme_host_port_ = base_url_.substr(0, path_start);
    path_prefix_ = base_url_.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
      path_prefix_.pop_back();
    }
  }
  if (options_.max_retries < 0) {
    throw ConfigError("max_retries", "must be >= 0");
  }
}

nlohmann::json JsonHttpClient::post(const std::string& path,
                                    const nlohmann::json& body) const {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
      options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
                         options_.timeout - secs)
                         .count();
  client.set_connection_timeout(secs.count(), usecs);
  client.set_read_timeout(secs.count(), usecs);
  client.set_write_timeout(secs.count(), usecs);

  httplib::Headers headers;
  if (const char* token = std::getenv(kApiTokenEnv); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const std::string full_path = path_prefix_ + path;
  const std::string payload = body.dump();
  auto backoff = options_.initial_backoff;
  std::string last_failure;

  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(full_path, headers, payload, "application/json");
    if (!res) {
      last_failure = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw TransportError(base_url_ + path +
                             ": response is not JSON: " + e.what());
      }
    }
    last_failure = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) {
      throw TransportError(base_url_ + path + ": " + last_failure + " " +
                           res->body);
    }
  }
  throw TransportError(base_url_ + path + ": " + last_failure + " after " +
                       std::to_string(options_.max_retries) + " retries");
}

}  // namespace scramble
