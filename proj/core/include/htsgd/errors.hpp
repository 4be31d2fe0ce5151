#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace htsgd {

class NetworkParams;

/// Precondition violated by an argument (alpha out of range, empty batch, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input that is well-formed but cannot be processed (e.g. an all-zero matrix).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Malformed binary input; carries the byte offset where decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Invalid experiment configuration; carries the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A parameter update or simulated state became non-finite.
///
/// `iteration()` is the step index that produced the non-finite value. When
/// raised by the trainer, `last_finite()` holds the parameters right before
/// that step.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::uint64_t iteration, std::shared_ptr<const NetworkParams> last_finite = nullptr)
      : std::runtime_error("diverged: non-finite value at iteration " + std::to_string(iteration)),
        iteration_(iteration),
        last_finite_(std::move(last_finite)) {}

  std::uint64_t iteration() const noexcept { return iteration_; }
  const std::shared_ptr<const NetworkParams>& last_finite() const noexcept { return last_finite_; }

 private:
  std::uint64_t iteration_;
  std::shared_ptr<const NetworkParams> last_finite_;
};

}  // namespace htsgd
