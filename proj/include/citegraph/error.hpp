#pragma once

#include <stdexcept>
#include <string>

namespace citegraph {

// Exit codes used by the command-line tool. Each error class maps onto one.
enum class ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNetwork = 3 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kData; }
};

// Bad flags, bad config values, missing required inputs.
class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
};

// Malformed or inconsistent input data (duplicate ids, missing embeddings, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Endpoint unreachable, HTTP failure, or a response we cannot read.
class NetworkError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNetwork; }
};

}  // namespace citegraph
