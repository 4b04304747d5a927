#ifndef UTTPROBE_ERROR_HPP
#define UTTPROBE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uttprobe {

/// Malformed CoNLL-U input. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Probe dataset JSON that violates the schema or the token invariants.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violation on an operation argument.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ProviderErrorKind { AuthMissing, Transient, Fatal, Timeout, Script };

class ProviderError : public std::runtime_error {
 public:
  ProviderError(ProviderErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ProviderErrorKind kind() const { return kind_; }
  bool transient() const {
    return kind_ == ProviderErrorKind::Transient || kind_ == ProviderErrorKind::Timeout;
  }

 private:
  ProviderErrorKind kind_;
};

}  // namespace uttprobe

#endif  // UTTPROBE_ERROR_HPP
