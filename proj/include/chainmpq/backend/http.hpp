// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "chainmpq/backend/backend.hpp"

namespace chainmpq::backend {

struct HttpOptions {
  std::chrono::milliseconds timeout{30000};
  // Extra attempts after the first on timeouts, connection failures and 5xx.
  int retries = 2;
  std::chrono::milliseconds backoff{200};  // doubled per retry
};

// Client for POST {endpoint}/v1/step. Each call opens its own connection,
// so one instance may serve concurrent workers.
class HttpBackend final : public Backend {
 public:
  // endpoint: "http://host:port" with an optional path prefix.
  explicit HttpBackend(std::string endpoint, HttpOptions options = {});

  BackendResponse step(const BackendRequest& request) override;
  // GET {endpoint}/v1/health body, parsed as JSON text.
  std::string health();

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  std::string origin_;  // scheme://host:port
  std::string prefix_;  // path without trailing slash
  HttpOptions options_;
};

// Serves a backend over the wire protocol on host:port until stop() is
// called. GET /v1/health reports {"status", "n_layers"}.
class WireServer {
 public:
  WireServer(Backend& backend, std::size_t n_layers);
  ~WireServer();
  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests.
  void listen();
  // Blocks until listen() is accepting; stop() before that is lost.
  void wait_until_ready();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chainmpq::backend
