#pragma once

#include <stdexcept>
#include <string>

namespace recql {

// Line/column of a token in the source text. Line 0 means "no location".
struct SourceSpan {
  int line = 0;
  int column = 0;
  bool valid() const { return line > 0; }
};

enum class ErrorKind {
  Syntax,
  Arity,
  NoMatch,
  AmbiguousMatch,
  EmptyRange,
  Cycle,
  DepthLimit,
  UnknownColumn,
  UnknownUdf,
  Type,
  DimMismatch,
  NotAnEdge,
  TooLarge,
  MissingInput,
  Kernel,
  ResourceLimit,
  Config,
  Io,
  Internal,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message, SourceSpan span = {});

  ErrorKind kind() const { return kind_; }
  SourceSpan span() const { return span_; }

  // Message prefixed with kind and location, suitable for stderr.
  std::string diagnostic() const;

private:
  ErrorKind kind_;
  SourceSpan span_;
};

// Process exit code for a failure: resource exhaustion is distinguished
// from every other compile/run error.
int exit_code_for(const Error& err);

}  // namespace recql
