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

#pragma once

#include <chrono>
#include <string>

#include "json.hpp"

namespace scramble {

struct HttpOptions {
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  // Delay before the first retry; doubles on every further attempt.
  std::chrono::milliseconds initial_backoff{200};
};

// Name of the environment variable holding the bearer token sent to every
// service. Tokens never come from config files.
inline constexpr const char* kApiTokenEnv = "SCRAMBLE_API_TOKEN";

// JSON-over-HTTP POST client for the model services.
//
// `base_url` is "http://host[:port][/prefix]"; request paths are appended to
// the prefix. Connection failures, 429 and 5xx responses are retried up to
// `max_retries` times with exponential backoff; any other non-2xx status
// fails immediately. Both cases surface as TransportError.
class JsonHttpClient {
 public:
  JsonHttpClient(std::string base_url, HttpOptions options);

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::string base_url_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  HttpOptions options_;
};

}  // namespace scramble
