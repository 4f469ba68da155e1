#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace seqpolicy {

// Root of every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Data does not conform to the declared schema (dimensions, arities).
class SchemaError : public Error {
  public:
    using Error::Error;
};

// An arm or stage index outside its valid range.
class IndexError : public Error {
  public:
    using Error::Error;
};

// A MISSING reward reached a consumer that has no imputation rule.
class MissingRewardError : public Error {
  public:
    using Error::Error;
};

// Invalid hyperparameter or distribution parameter.
class ParameterError : public Error {
  public:
    using Error::Error;
};

// Cholesky pivot was non-positive.
class FactorizationError : public Error {
  public:
    using Error::Error;
};

// A matched record carries a zero (or out of range) propensity.
class PositivityError : public Error {
  public:
    using Error::Error;
};

// Every importance weight is zero, so a ratio estimator is undefined.
class OverlapError : public Error {
  public:
    using Error::Error;
};

// Backward filtering left no trajectories at some stage.
class SampleDepletionError : public Error {
  public:
    SampleDepletionError(const std::string& what, std::vector<std::size_t> retained)
        : Error(what), retained_(std::move(retained)) {}
    const std::vector<std::size_t>& retained() const noexcept { return retained_; }

  private:
    std::vector<std::size_t> retained_;
};

// An internal identity that should hold by construction did not.
class ConsistencyError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line),
          column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

// Config validation failure; carries every violation, not only the first.
class ConfigError : public Error {
  public:
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid configuration:";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> violations_;
};

}  // namespace seqpolicy
