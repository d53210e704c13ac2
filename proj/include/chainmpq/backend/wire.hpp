// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// JSON wire format of POST {endpoint}/v1/step.
//
// request:
//   {"image_ref": str | "image_b64": str, "question": str,
//    "keywords": [str], "context": [{"q": str, "a": str}],
//    "bias": {"indices": [int], "weights": [float]} | null,
//    "enhance": {"enabled": bool, "keywords": [str]}, "want_attention": bool}
// response:
//   {"answer": str, "confidence": float, "visual_token_count": int,
//    "attention": [[[float]]] | null, "warnings": [str]}
//
// Unknown fields are ignored. Validation failures throw SchemaViolation with
// the JSON path of the offending value.

#include <string>
#include <string_view>
#include <variant>

#include "chainmpq/backend/backend.hpp"
#include "json.hpp"

namespace chainmpq::backend {

enum class Direction { kRequest, kResponse };

nlohmann::ordered_json to_json(const BackendRequest& request);
nlohmann::ordered_json to_json(const BackendResponse& response);

BackendRequest request_from_json(const nlohmann::json& doc);
// A missing "confidence" becomes 1.0 and adds a warning.
BackendResponse response_from_json(const nlohmann::json& doc);

BackendRequest parse_request(std::string_view json_text);
BackendResponse parse_response(std::string_view json_text);

std::variant<BackendRequest, BackendResponse> validate_wire(
    std::string_view json_text, Direction direction);

inline constexpr std::string_view kMissingConfidenceWarning =
    "confidence missing; defaulted to 1.0";

}  // namespace chainmpq::backend
