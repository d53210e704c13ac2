// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace chainmpq {

// Precondition or shape violation on a library call.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A question outside the relational template grammar.
class Unparseable : public std::runtime_error {
 public:
  explicit Unparseable(std::string text, const std::string& why = "")
      : std::runtime_error("unparseable question: \"" + text + "\"" +
                           (why.empty() ? "" : " (" + why + ")")),
        text_(std::move(text)) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

// Top-k attention carries no mass, so no mask can be normalized.
class DegenerateAttention : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown scene or image reference.
class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base for failures crossing the model boundary. Carries the raw payload
// (response body or request text) when one exists.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, std::string payload)
      : std::runtime_error(what), payload_(std::move(payload)) {}
  const std::string& payload() const { return payload_; }

 private:
  std::string payload_;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ConnectionError : public BackendError {
 public:
  using BackendError::BackendError;
};

class HttpStatusError : public BackendError {
 public:
  HttpStatusError(int status, std::string payload)
      : BackendError("backend returned HTTP " + std::to_string(status),
                     std::move(payload)),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Wire-format violation. path() is a JSON path such as "$.confidence".
class SchemaViolation : public BackendError {
 public:
  SchemaViolation(std::string path, const std::string& detail,
                  std::string payload = "")
      : BackendError(path + ": " + detail, std::move(payload)),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace chainmpq
