#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixrank {

// Shape or index mismatch between operands.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

// Input violates a mathematical precondition (negative entry, a < b, ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

class RankExcessError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An operation declined to produce a result, e.g. factorizing a non-member.
class RefusalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Non-finite values, division by zero, or an algorithm that failed to deliver.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

} // namespace mixrank
