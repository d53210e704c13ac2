// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "chainmpq/backend/wire.hpp"
#include "chainmpq/error.hpp"
#include "test_support.hpp"

namespace chainmpq::backend {
namespace {

using nlohmann::json;
using testing::Fixture;
using testing::Gen;
using testing::ReadFile;

std::string RandomWord(Gen& gen) {
  static const std::vector<std::string> kWords = {
      "man", "surfboard", "Where is the dog?", "", "café", "quote\"d", "tab\there",
      "line\nbreak", "The man is riding the surfboard."};
  return gen.Pick(kWords);
}

BackendRequest RandomRequest(Gen& gen) {
  BackendRequest req;
  if (gen.Coin()) req.image_ref = "scene-" + std::to_string(gen.Index(0, 99));
  else req.image_b64 = "iVBORw0KGgo=";
  req.question = RandomWord(gen);
  for (std::size_t i = gen.Index(0, 3); i > 0; --i) req.keywords.push_back(RandomWord(gen));
  for (std::size_t i = gen.Index(0, 4); i > 0; --i) {
    req.context.push_back({RandomWord(gen), RandomWord(gen)});
  }
  if (gen.Coin()) {
    SparseBias bias;
    std::size_t index = gen.Index(0, 5);
    for (std::size_t i = gen.Index(0, 20); i > 0; --i) {
      bias.indices.push_back(index);
      bias.weights.push_back(gen.Coin(0.1) ? 0.0 : gen.Uniform(0.0, 7.0));
      index += gen.Index(1, 40);
    }
    req.bias = bias;
  }
  req.enhance.enabled = gen.Coin();
  if (req.enhance.enabled) req.enhance.keywords = req.keywords;
  req.want_attention = !req.keywords.empty() && gen.Coin();
  return req;
}

BackendResponse RandomResponse(Gen& gen) {
  BackendResponse resp;
  resp.answer = RandomWord(gen);
  resp.confidence = gen.Coin(0.1) ? 1.0 : gen.Uniform(0.0, 1.0);
  resp.visual_token_count = gen.Index(1, 50);
  if (gen.Coin()) {
    memory::LayerRows rows(gen.Index(1, 4));
    const std::size_t tokens = gen.Index(1, 3);
    for (auto& layer : rows) {
      for (std::size_t t = 0; t < tokens; ++t) {
        layer.push_back(gen.Distribution(resp.visual_token_count));
      }
    }
    resp.attention = rows;
  }
  for (std::size_t i = gen.Index(0, 2); i > 0; --i) resp.warnings.push_back(RandomWord(gen));
  return resp;
}

TEST(Wire, RequestRoundTripProperty) {
  Gen gen(51);
  for (int i = 0; i < 500; ++i) {
    const auto req = RandomRequest(gen);
    const std::string text = to_json(req).dump();
    ASSERT_EQ(parse_request(text), req) << text;
  }
}

TEST(Wire, ResponseRoundTripProperty) {
  Gen gen(52);
  for (int i = 0; i < 500; ++i) {
    const auto resp = RandomResponse(gen);
    const std::string text = to_json(resp).dump();
    ASSERT_EQ(parse_response(text), resp) << text;
  }
}

TEST(Wire, GoldenRequest) {
  const std::string text = ReadFile(Fixture("wire/request_golden.json"));
  const auto req = parse_request(text);
  EXPECT_EQ(req.image_ref, "surfboard");
  EXPECT_TRUE(req.image_b64.empty());
  EXPECT_EQ(req.keywords, (std::vector<std::string>{"man"}));
  ASSERT_EQ(req.context.size(), 2u);
  EXPECT_EQ(req.context[1].question, "Where is the surfboard?");
  ASSERT_TRUE(req.bias.has_value());
  EXPECT_EQ(req.bias->indices, (std::vector<std::size_t>{0, 1, 8}));
  EXPECT_EQ(req.bias->weights, (std::vector<double>{0.5, 1.25, 2.0}));
  EXPECT_TRUE(req.enhance.enabled);
  EXPECT_TRUE(req.want_attention);
  // Serialization is a fixed point after one round.
  EXPECT_EQ(json::parse(to_json(req).dump()), json::parse(text));
}

TEST(Wire, GoldenResponse) {
  const auto resp = parse_response(ReadFile(Fixture("wire/response_golden.json")));
  EXPECT_EQ(resp.answer, "The man is riding the surfboard.");
  EXPECT_EQ(resp.confidence, 0.7);
  EXPECT_EQ(resp.visual_token_count, 4u);
  ASSERT_TRUE(resp.attention.has_value());
  EXPECT_EQ(resp.attention->size(), 3u);
  EXPECT_EQ((*resp.attention)[2].size(), 2u);
  EXPECT_TRUE(resp.warnings.empty());
}

TEST(Wire, MissingConfidenceDefaultsWithWarning) {
  const auto resp = parse_response(ReadFile(Fixture("wire/response_no_confidence.json")));
  EXPECT_EQ(resp.confidence, 1.0);
  EXPECT_FALSE(resp.attention.has_value());
  ASSERT_EQ(resp.warnings.size(), 1u);
  EXPECT_EQ(resp.warnings[0], kMissingConfidenceWarning);
}

TEST(Wire, InvalidCasesReportPaths) {
  const auto cases = json::parse(ReadFile(Fixture("wire/invalid_cases.json")));
  ASSERT_FALSE(cases.empty());
  for (const auto& c : cases) {
    const std::string text = c["doc"].dump();
    const auto direction =
        c["direction"] == "request" ? Direction::kRequest : Direction::kResponse;
    try {
      validate_wire(text, direction);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const SchemaViolation& e) {
      EXPECT_EQ(e.path(), c["path"].get<std::string>()) << e.what();
      EXPECT_EQ(e.payload(), text);
    }
  }
}

TEST(Wire, ConfidenceOutOfRange) {
  try {
    parse_response(R"({"answer": "yes", "confidence": 1.5, "visual_token_count": 4})");
    FAIL();
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.path(), "$.confidence");
    EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
  }
}

TEST(Wire, NegativeBiasWeightPointsIntoBias) {
  auto doc = json::parse(ReadFile(Fixture("wire/request_golden.json")));
  doc["bias"]["weights"][1] = -0.5;
  try {
    parse_request(doc.dump());
    FAIL();
  } catch (const SchemaViolation& e) {
    EXPECT_TRUE(e.path().starts_with("$.bias")) << e.path();
  }
}

TEST(Wire, MalformedJson) {
  try {
    parse_response("{\"answer\": ");
    FAIL();
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.path(), "$");
    EXPECT_EQ(e.payload(), "{\"answer\": ");
  }
}

TEST(Wire, UnknownFieldsIgnored) {
  const auto resp =
      parse_response(R"({"answer": "no", "confidence": 0.2, "visual_token_count": 1, "x": 1})");
  EXPECT_EQ(resp.answer, "no");
}

TEST(Wire, ValidateReturnsTypedResult) {
  const auto v = validate_wire(ReadFile(Fixture("wire/request_golden.json")), Direction::kRequest);
  EXPECT_TRUE(std::holds_alternative<BackendRequest>(v));
}

TEST(SparseBiasTest, FromDenseKeepsPositiveEntries) {
  const std::vector<double> dense = {0.0, 1.5, 0.0, 2.0, 0.5};
  const auto bias = SparseBias::FromDense(dense);
  EXPECT_EQ(bias.indices, (std::vector<std::size_t>{1, 3, 4}));
  EXPECT_EQ(bias.weights, (std::vector<double>{1.5, 2.0, 0.5}));
  EXPECT_DOUBLE_EQ(bias.total(), 4.0);
  const std::vector<std::size_t> patches = {0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(bias.MassOn(patches), 3.5);
}

}  // namespace
}  // namespace chainmpq::backend
