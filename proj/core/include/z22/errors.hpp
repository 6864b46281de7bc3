#pragma once

#include <stdexcept>
#include <string>

namespace z22 {

/// Error conditions surfaced by the engine. CLI maps these to exit codes.
enum class Errc {
  ZeroDenominator,
  PoleAtOrigin,
  UnboundAtom,
  DivisionNearZero,
  OutOfWindow,
  LaurentNotSupported,
  TruncationTooShallow,
  SingularD,
  NotInCanonicalForm,
  SupportViolation,
  DecompositionMismatch,
  ResampleExhausted,
  NonFiniteValue,
  InvalidInput,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::PoleAtOrigin: return "PoleAtOrigin";
    case Errc::UnboundAtom: return "UnboundAtom";
    case Errc::DivisionNearZero: return "DivisionNearZero";
    case Errc::OutOfWindow: return "OutOfWindow";
    case Errc::LaurentNotSupported: return "LaurentNotSupported";
    case Errc::TruncationTooShallow: return "TruncationTooShallow";
    case Errc::SingularD: return "SingularD";
    case Errc::NotInCanonicalForm: return "NotInCanonicalForm";
    case Errc::SupportViolation: return "SupportViolation";
    case Errc::DecompositionMismatch: return "DecompositionMismatch";
    case Errc::ResampleExhausted: return "ResampleExhausted";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::InvalidInput: return "InvalidInput";
  }
  return "UnknownError";
}

}  // namespace z22
