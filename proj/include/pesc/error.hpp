#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pesc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record that breaks its type invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed line in a record file. `line` is 1-based.
class CorpusError : public Error {
 public:
  CorpusError(std::size_t line, std::string field, const std::string& message)
      : Error("line " + std::to_string(line) + (field.empty() ? "" : ", field '" + field + "'") +
              ": " + message),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// A pipeline stage (extraction, expansion, administration, synthesis) gave up
// on one item. Callers record it and move on to the next item.
class StageError : public Error {
 public:
  using Error::Error;
};

// A statistic that is mathematically undefined for its input.
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

}  // namespace pesc
