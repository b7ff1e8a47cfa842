#pragma once

#include <stdexcept>
#include <string>

namespace lapdet {

enum class ErrorKind {
  NonScalarCovariance,
  SchemaError,
  NonUnitaryMatrix,
  MeshIncompatible,
  PunctureOnEdge,
  UnreflectableEdge,
  NonSymmetrizable,
  NonUnitaryGauge,
  KernelMismatch,
  SizeLimit,
  MissingVectors,
  AngleNotRepresentable,
  QuadratureFailure,
  TruncationBudgetExceeded,
  TailNotDecaying,
  OverlapViolation,
  BudgetExceeded,
  IllConditioned,
  KernelJump,
  AssemblyMismatch,
  Usage,
  Io,
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonScalarCovariance: return "NonScalarCovariance";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::NonUnitaryMatrix: return "NonUnitaryMatrix";
    case ErrorKind::MeshIncompatible: return "MeshIncompatible";
    case ErrorKind::PunctureOnEdge: return "PunctureOnEdge";
    case ErrorKind::UnreflectableEdge: return "UnreflectableEdge";
    case ErrorKind::NonSymmetrizable: return "NonSymmetrizable";
    case ErrorKind::NonUnitaryGauge: return "NonUnitaryGauge";
    case ErrorKind::KernelMismatch: return "KernelMismatch";
    case ErrorKind::SizeLimit: return "SizeLimit";
    case ErrorKind::MissingVectors: return "MissingVectors";
    case ErrorKind::AngleNotRepresentable: return "AngleNotRepresentable";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::TruncationBudgetExceeded: return "TruncationBudgetExceeded";
    case ErrorKind::TailNotDecaying: return "TailNotDecaying";
    case ErrorKind::OverlapViolation: return "OverlapViolation";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::KernelJump: return "KernelJump";
    case ErrorKind::AssemblyMismatch: return "AssemblyMismatch";
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace lapdet
