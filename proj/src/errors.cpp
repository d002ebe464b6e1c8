#include "recql/errors.hpp"

namespace recql {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Arity: return "ArityError";
    case ErrorKind::NoMatch: return "NoMatch";
    case ErrorKind::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorKind::EmptyRange: return "EmptyRange";
    case ErrorKind::Cycle: return "CycleError";
    case ErrorKind::DepthLimit: return "DepthLimit";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::UnknownUdf: return "UnknownUdf";
    case ErrorKind::Type: return "TypeError";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::NotAnEdge: return "NotAnEdge";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::Kernel: return "KernelError";
    case ErrorKind::ResourceLimit: return "ResourceLimit";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Internal: return "InternalError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, std::string message, SourceSpan span)
    : std::runtime_error(std::move(message)), kind_(kind), span_(span) {}

std::string Error::diagnostic() const {
  std::string out = error_kind_name(kind_);
  out += ": ";
  out += what();
  if (span_.valid()) {
    out += " at line " + std::to_string(span_.line) + ", column " + std::to_string(span_.column);
  }
  return out;
}

int exit_code_for(const Error& err) {
  return err.kind() == ErrorKind::ResourceLimit ? 3 : 2;
}

}  // namespace recql
