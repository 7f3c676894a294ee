#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lace {

enum class ErrorCode {
  InvalidArgument,
  AsymmetricTable,
  NonzeroSelfCoupling,
  ZeroCoupling,
  FugacityOutOfRange,
  SingularMode,
  QuadratureNotConverged,
  DimensionTooLow,
  RangeTooSmall,
  FerromagneticViolation,
  NonpositiveLambda,
  BlockAsymmetry,
  TooManyVertices,
  TooManyBonds,
  BadCutRadius,
  NotEquilibrated,
  ExtrapolationUnstable,
  SupercriticalF,
  DegenerateCurvature,
  FitWindowTooSmall,
  NonpositiveA,
  ConfigInvalid,
  Io,
};

std::string_view error_name(ErrorCode code);

/// Every failure raised by the toolkit carries one of the codes above so the
/// CLI can emit a structured record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(error_name(code)) + ": " + what);
}

inline std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AsymmetricTable: return "AsymmetricTable";
    case ErrorCode::NonzeroSelfCoupling: return "NonzeroSelfCoupling";
    case ErrorCode::ZeroCoupling: return "ZeroCoupling";
    case ErrorCode::FugacityOutOfRange: return "FugacityOutOfRange";
    case ErrorCode::SingularMode: return "SingularMode";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::DimensionTooLow: return "DimensionTooLow";
    case ErrorCode::RangeTooSmall: return "RangeTooSmall";
    case ErrorCode::FerromagneticViolation: return "FerromagneticViolation";
    case ErrorCode::NonpositiveLambda: return "NonpositiveLambda";
    case ErrorCode::BlockAsymmetry: return "BlockAsymmetry";
    case ErrorCode::TooManyVertices: return "TooManyVertices";
    case ErrorCode::TooManyBonds: return "TooManyBonds";
    case ErrorCode::BadCutRadius: return "BadCutRadius";
    case ErrorCode::NotEquilibrated: return "NotEquilibrated";
    case ErrorCode::ExtrapolationUnstable: return "ExtrapolationUnstable";
    case ErrorCode::SupercriticalF: return "SupercriticalF";
    case ErrorCode::DegenerateCurvature: return "DegenerateCurvature";
    case ErrorCode::FitWindowTooSmall: return "FitWindowTooSmall";
    case ErrorCode::NonpositiveA: return "NonpositiveA";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace lace
