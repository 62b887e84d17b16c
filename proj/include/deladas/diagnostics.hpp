#pragma once

#include <string>
#include <vector>

namespace deladas {

enum class Severity { Error, Warning };

/// A positioned message produced by the parser, validator, or document
/// readers. Error diagnostics prevent solving; warnings do not.
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  int line = 0;    // 1-based; 0 when the message has no source position
  int column = 0;  // 1-based

  bool is_error() const { return severity == Severity::Error; }
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.is_error()) return true;
  return false;
}

inline Diagnostic error_at(std::string message, int line = 0, int column = 0) {
  return Diagnostic{Severity::Error, std::move(message), line, column};
}

inline Diagnostic warning_at(std::string message, int line = 0, int column = 0) {
  return Diagnostic{Severity::Warning, std::move(message), line, column};
}

}  // namespace deladas
