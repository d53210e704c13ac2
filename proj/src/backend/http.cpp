// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/backend/http.hpp"

#include <regex>
#include <thread>

#include "chainmpq/backend/wire.hpp"
#include "chainmpq/error.hpp"
#include "httplib.h"

namespace chainmpq::backend {
namespace {

constexpr const char* kJson = "application/json";

std::unique_ptr<httplib::Client> MakeClient(const std::string& origin,
                                            const HttpOptions& options) {
  auto client = std::make_unique<httplib::Client>(origin);
  client->set_connection_timeout(options.timeout);
  client->set_read_timeout(options.timeout);
  client->set_write_timeout(options.timeout);
  return client;
}

// Runs `send` with retries; `what` names the call in errors.
template <typename Send>
std::string WithRetries(const HttpOptions& options, const std::string& what,
                        const std::string& payload, Send send) {
  std::chrono::milliseconds delay = options.backoff;
  for (int attempt = 0;; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    httplib::Result result = send();
    const auto elapsed = std::chrono::steady_clock::now() - started;
    std::exception_ptr error;
    if (!result) {
      const httplib::Error e = result.error();
      const bool timed_out = e == httplib::Error::ConnectionTimeout ||
                             ((e == httplib::Error::Read || e == httplib::Error::Write) &&
                              elapsed >= options.timeout);
      const std::string msg = what + ": " + httplib::to_string(e);
      error = timed_out ? std::make_exception_ptr(TimeoutError("timeout: " + msg, payload))
                        : std::make_exception_ptr(ConnectionError(msg, payload));
    } else if (result->status >= 200 && result->status < 300) {
      return result->body;
    } else if (result->status >= 500) {
      error = std::make_exception_ptr(HttpStatusError(result->status, result->body));
    } else {
      throw HttpStatusError(result->status, result->body);
    }
    if (attempt >= options.retries) std::rethrow_exception(error);
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

}  // namespace

HttpBackend::HttpBackend(std::string endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  static const std::regex kUrl(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(endpoint_, match, kUrl)) {
    throw InvalidArgument("endpoint must look like http://host:port[/prefix], got '" +
                          endpoint_ + "'");
  }
  origin_ = match[1].str();
  prefix_ = match[2].str();
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (options_.retries < 0) throw InvalidArgument("retries must be nonnegative");
}

BackendResponse HttpBackend::step(const BackendRequest& request) {
  const std::string body = to_json(request).dump();
  const std::string path = prefix_ + "/v1/step";
  const std::string text =
      WithRetries(options_, "POST " + endpoint_ + "/v1/step", body, [&] {
        return MakeClient(origin_, options_)->Post(path, body, kJson);
      });
  return parse_response(text);
}

std::string HttpBackend::health() {
  const std::string path = prefix_ + "/v1/health";
  return WithRetries(options_, "GET " + endpoint_ + "/v1/health", "",
                     [&] { return MakeClient(origin_, options_)->Get(path); });
}

struct WireServer::Impl {
  Impl(Backend& b, std::size_t n) : backend(b), n_layers(n) {}
  Backend& backend;
  std::size_t n_layers;
  httplib::Server server;
};

WireServer::WireServer(Backend& backend, std::size_t n_layers)
    : impl_(std::make_unique<Impl>(backend, n_layers)) {
  auto* impl = impl_.get();
  impl->server.Post("/v1/step", [impl](const httplib::Request& req, httplib::Response& res) {
    const auto reply = [&res](int status, const std::string& body) {
      res.status = status;
      res.set_content(body, kJson);
    };
    try {
      const BackendRequest request = parse_request(req.body);
      reply(200, to_json(impl->backend.step(request)).dump());
    } catch (const SchemaViolation& e) {
      reply(400, nlohmann::json{{"error", e.what()}, {"path", e.path()}}.dump());
    } catch (const InvalidArgument& e) {
      reply(400, nlohmann::json{{"error", e.what()}}.dump());
    } catch (const NotFound& e) {
      reply(404, nlohmann::json{{"error", e.what()}}.dump());
    } catch (const std::exception& e) {
      reply(500, nlohmann::json{{"error", e.what()}}.dump());
    }
  });
  impl->server.Get("/v1/health", [impl](const httplib::Request&, httplib::Response& res) {
    res.set_content(
        nlohmann::json{{"status", "ok"}, {"n_layers", impl->n_layers}}.dump(), kJson);
  });
}

WireServer::~WireServer() { stop(); }

int WireServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw ConnectionError("cannot bind " + host, "");
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw ConnectionError("cannot bind " + host + ":" + std::to_string(port), "");
  }
  return port;
}

void WireServer::listen() { impl_->server.listen_after_bind(); }

void WireServer::wait_until_ready() { impl_->server.wait_until_ready(); }

void WireServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace chainmpq::backend
