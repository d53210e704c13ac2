// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <functional>
#include <thread>

#include "chainmpq/backend/http.hpp"
#include "chainmpq/backend/wire.hpp"
#include "chainmpq/error.hpp"
#include "httplib.h"
#include "test_support.hpp"

namespace chainmpq::backend {
namespace {

using namespace std::chrono_literals;
using testing::kSurfboardQuestion;
using testing::SurfboardBackend;

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Raw server answering POST <path> with a scripted handler.
class ScriptedServer {
 public:
  ScriptedServer(const std::string& path, Handler handler) {
    server_.Post(path, [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint(const std::string& prefix = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }
  int hits() const { return hits_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
};

// WireServer over the surfboard mock, run on a background thread.
class MockServer {
 public:
  MockServer() : mock_(SurfboardBackend()), server_(mock_, 3) {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.listen(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  MockBackend mock_;
  WireServer server_;
  int port_ = 0;
  std::thread thread_;
};

HttpOptions Fast(int retries = 2) {
  HttpOptions o;
  o.timeout = 2000ms;
  o.retries = retries;
  o.backoff = 1ms;
  return o;
}

BackendRequest Ask(std::string question = kSurfboardQuestion) {
  BackendRequest req;
  req.image_ref = "surfboard";
  req.question = std::move(question);
  req.keywords = {"man", "surfboard"};
  return req;
}

void Reply(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

TEST(Http, MockOverWireMatchesInProcess) {
  MockServer server;
  HttpBackend client(server.endpoint(), Fast());
  auto mock = SurfboardBackend();
  auto req = Ask("What is the relationship between the man and the surfboard?");
  req.want_attention = true;
  req.bias = SparseBias{{0, 8}, {0.25, 2.0}};
  EXPECT_EQ(client.step(req), mock.step(req));
  EXPECT_EQ(client.step(Ask()).answer, "yes");
}

TEST(Http, HealthReportsLayers) {
  MockServer server;
  HttpBackend client(server.endpoint(), Fast());
  const auto doc = nlohmann::json::parse(client.health());
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["n_layers"], 3);
}

TEST(Http, ServerRejectsInvalidRequestWithPath) {
  MockServer server;
  httplib::Client raw(server.endpoint());
  auto res = raw.Post("/v1/step", R"({"question": "x"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["path"], "$.image_ref");

  HttpBackend client(server.endpoint(), Fast());
  auto req = Ask();
  req.image_ref = "missing";
  try {
    client.step(req);
    FAIL();
  } catch (const HttpStatusError& e) {
    EXPECT_EQ(e.status(), 404);
  }
}

TEST(Http, MissingConfidenceDefaults) {
  ScriptedServer server("/v1/step", [](const httplib::Request&, httplib::Response& res) {
    Reply(res, 200, R"({"answer": "yes", "visual_token_count": 4})");
  });
  const auto resp = HttpBackend(server.endpoint(), Fast()).step(Ask());
  EXPECT_EQ(resp.confidence, 1.0);
  EXPECT_EQ(resp.warnings, (std::vector<std::string>{std::string(kMissingConfidenceWarning)}));
}

TEST(Http, WrongRowLengthIsSchemaViolation) {
  const std::string body =
      R"({"answer": "yes", "confidence": 0.5, "visual_token_count": 3, "attention": [[[0.5, 0.5]]]})";
  ScriptedServer server("/v1/step", [&](const httplib::Request&, httplib::Response& res) {
    Reply(res, 200, body);
  });
  try {
    HttpBackend(server.endpoint(), Fast()).step(Ask());
    FAIL();
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.path(), "$.attention[0][0]");
    EXPECT_EQ(e.payload(), body);
  }
  EXPECT_EQ(server.hits(), 1);
}

TEST(Http, ClientErrorNotRetried) {
  ScriptedServer server("/v1/step", [](const httplib::Request&, httplib::Response& res) {
    Reply(res, 422, R"({"error": "nope"})");
  });
  try {
    HttpBackend(server.endpoint(), Fast(3)).step(Ask());
    FAIL();
  } catch (const HttpStatusError& e) {
    EXPECT_EQ(e.status(), 422);
    EXPECT_EQ(e.payload(), R"({"error": "nope"})");
  }
  EXPECT_EQ(server.hits(), 1);
}

TEST(Http, ServerErrorRetriedThenSucceeds) {
  std::atomic<int> calls{0};
  ScriptedServer server("/v1/step", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      Reply(res, 503, "busy");
    } else {
      Reply(res, 200, R"({"answer": "no", "confidence": 0.8, "visual_token_count": 16})");
    }
  });
  EXPECT_EQ(HttpBackend(server.endpoint(), Fast(2)).step(Ask()).answer, "no");
  EXPECT_EQ(server.hits(), 3);
}

TEST(Http, ServerErrorExhaustsRetries) {
  ScriptedServer server("/v1/step", [](const httplib::Request&, httplib::Response& res) {
    Reply(res, 500, "boom");
  });
  try {
    HttpBackend(server.endpoint(), Fast(1)).step(Ask());
    FAIL();
  } catch (const HttpStatusError& e) {
    EXPECT_EQ(e.status(), 500);
  }
  EXPECT_EQ(server.hits(), 2);
}

TEST(Http, RequestBodyIsWireJson) {
  std::string seen;
  ScriptedServer server("/v1/step", [&](const httplib::Request& req, httplib::Response& res) {
    seen = req.body;
    Reply(res, 200, R"({"answer": "yes", "confidence": 1.0, "visual_token_count": 16})");
  });
  const auto req = Ask();
  HttpBackend(server.endpoint(), Fast()).step(req);
  EXPECT_EQ(parse_request(seen), req);
}

TEST(Http, PathPrefixHonored) {
  ScriptedServer server("/models/vlm/v1/step",
                        [](const httplib::Request&, httplib::Response& res) {
                          Reply(res, 200, R"({"answer": "yes", "visual_token_count": 1})");
                        });
  EXPECT_EQ(HttpBackend(server.endpoint("/models/vlm/"), Fast()).step(Ask()).answer, "yes");
  EXPECT_EQ(server.hits(), 1);
}

TEST(Http, ConnectionRefused) {
  // Port 1 is privileged and unused here.
  HttpBackend client("http://127.0.0.1:1", Fast(1));
  EXPECT_THROW(client.step(Ask()), ConnectionError);
}

TEST(Http, TimeoutReported) {
  ScriptedServer server("/v1/step", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(600ms);
    Reply(res, 200, R"({"answer": "yes", "visual_token_count": 1})");
  });
  HttpOptions o = Fast(0);
  o.timeout = 150ms;
  EXPECT_THROW(HttpBackend(server.endpoint(), o).step(Ask()), TimeoutError);
}

TEST(Http, EndpointValidation) {
  EXPECT_THROW(HttpBackend("localhost:8000"), InvalidArgument);
  EXPECT_THROW(HttpBackend("https://example.com"), InvalidArgument);
  EXPECT_THROW(HttpBackend("http://h:1", HttpOptions{1000ms, -1, 1ms}), InvalidArgument);
  EXPECT_EQ(HttpBackend("http://h:1/x").endpoint(), "http://h:1/x");
}

}  // namespace
}  // namespace chainmpq::backend
