#pragma once

#include <stdexcept>
#include <string>

namespace treedepth {

// Error kinds surfaced by the library.  Operation contracts name which
// kinds they can raise; everything else indicates an internal bug and is
// guarded by assertions instead.
enum class ErrorKind {
    NotPresent,
    NotIsolated,
    SelfLoop,
    NoSuchEdge,
    EdgeExists,
    VertexSetMismatch,
    SyntaxError,
    SortError,
    UnboundVariable,
    TooLarge,
    UnassignedConstant,
    InvalidDepth,
    ValidationBudgetExceeded,
    CatalogBudgetExceeded,
    InconsistentLabel,
    DepthExceeded,
    DepthWouldExceed,
    NoRootWitness,
    Infeasible,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::NotPresent: return "NotPresent";
        case ErrorKind::NotIsolated: return "NotIsolated";
        case ErrorKind::SelfLoop: return "SelfLoop";
        case ErrorKind::NoSuchEdge: return "NoSuchEdge";
        case ErrorKind::EdgeExists: return "EdgeExists";
        case ErrorKind::VertexSetMismatch: return "VertexSetMismatch";
        case ErrorKind::SyntaxError: return "SyntaxError";
        case ErrorKind::SortError: return "SortError";
        case ErrorKind::UnboundVariable: return "UnboundVariable";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::UnassignedConstant: return "UnassignedConstant";
        case ErrorKind::InvalidDepth: return "InvalidDepth";
        case ErrorKind::ValidationBudgetExceeded: return "ValidationBudgetExceeded";
        case ErrorKind::CatalogBudgetExceeded: return "CatalogBudgetExceeded";
        case ErrorKind::InconsistentLabel: return "InconsistentLabel";
        case ErrorKind::DepthExceeded: return "DepthExceeded";
        case ErrorKind::DepthWouldExceed: return "DepthWouldExceed";
        case ErrorKind::NoRootWitness: return "NoRootWitness";
        case ErrorKind::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace treedepth
