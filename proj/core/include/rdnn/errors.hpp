#pragma once

#include <stdexcept>
#include <string>

namespace rdnn {

// Error categories surfaced across the library. The CLI maps these onto
// per-subcommand exit codes.
enum class Errc {
  // data ingestion / features
  MissingColumn,
  NonPositivePrice,
  NegativeVolume,
  EmptyIntersectionCalendar,
  EmptySeries,
  SeriesTooShort,
  InvalidPeriods,
  HistoryTooShort,
  BadRow,
  // environment
  NonPositiveGrossReturn,
  InvalidWeights,
  BankruptWealth,
  LengthMismatch,
  UnknownAsset,
  EmptyReturns,
  LogOfNonPositive,
  // policy / training
  ShapeMismatch,
  EmptySlice,
  NonFiniteGradient,
  InsufficientData,
  // selection
  KTooLarge,
  DegenerateMask,
  PoolTooSmall,
  // orchestration
  CalendarMismatch,
  ConfigError,
  IoError,
};

inline const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonPositivePrice: return "NonPositivePrice";
    case Errc::NegativeVolume: return "NegativeVolume";
    case Errc::EmptyIntersectionCalendar: return "EmptyIntersectionCalendar";
    case Errc::EmptySeries: return "EmptySeries";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::InvalidPeriods: return "InvalidPeriods";
    case Errc::HistoryTooShort: return "HistoryTooShort";
    case Errc::BadRow: return "BadRow";
    case Errc::NonPositiveGrossReturn: return "NonPositiveGrossReturn";
    case Errc::InvalidWeights: return "InvalidWeights";
    case Errc::BankruptWealth: return "BankruptWealth";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::UnknownAsset: return "UnknownAsset";
    case Errc::EmptyReturns: return "EmptyReturns";
    case Errc::LogOfNonPositive: return "LogOfNonPositive";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptySlice: return "EmptySlice";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::DegenerateMask: return "DegenerateMask";
    case Errc::PoolTooSmall: return "PoolTooSmall";
    case Errc::CalendarMismatch: return "CalendarMismatch";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail = "") {
  throw Error(code, detail);
}

}  // namespace rdnn
