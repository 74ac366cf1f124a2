#pragma once

#include <stdexcept>
#include <string>

namespace taw {

enum class ErrorKind {
  NotHermitian,
  NotPositiveDefinite,
  InvolutionViolation,
  FlowConjugationMismatch,
  NotRepresentation,
  EquivarianceViolation,
  BaseMismatch,
  SpectrumAsymmetric,
  SectorNotInducedBimodule,
  NormExceedsOne,
  DimensionMismatch,
  BudgetExceeded,
  NotATwist,
  LevelMismatch,
  QOutOfRange,
  IncompatibleTwist,
  VectorDimensionMismatch,
  RealityViolation,
  WordTooLongForCutoff,
  HypothesisViolation,
  EigenrelationViolated,
  NotAdjointClosed,
  ZeroJump,
  RoundTripMismatch,
  ConfigParse,
  ConfigSchema,
};

inline const char* error_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InvolutionViolation: return "InvolutionViolation";
    case ErrorKind::FlowConjugationMismatch: return "FlowConjugationMismatch";
    case ErrorKind::NotRepresentation: return "NotRepresentation";
    case ErrorKind::EquivarianceViolation: return "EquivarianceViolation";
    case ErrorKind::BaseMismatch: return "BaseMismatch";
    case ErrorKind::SpectrumAsymmetric: return "SpectrumAsymmetric";
    case ErrorKind::SectorNotInducedBimodule: return "SectorNotInducedBimodule";
    case ErrorKind::NormExceedsOne: return "NormExceedsOne";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::NotATwist: return "NotATwist";
    case ErrorKind::LevelMismatch: return "LevelMismatch";
    case ErrorKind::QOutOfRange: return "QOutOfRange";
    case ErrorKind::IncompatibleTwist: return "IncompatibleTwist";
    case ErrorKind::VectorDimensionMismatch: return "VectorDimensionMismatch";
    case ErrorKind::RealityViolation: return "RealityViolation";
    case ErrorKind::WordTooLongForCutoff: return "WordTooLongForCutoff";
    case ErrorKind::HypothesisViolation: return "HypothesisViolation";
    case ErrorKind::EigenrelationViolated: return "EigenrelationViolated";
    case ErrorKind::NotAdjointClosed: return "NotAdjointClosed";
    case ErrorKind::ZeroJump: return "ZeroJump";
    case ErrorKind::RoundTripMismatch: return "RoundTripMismatch";
    case ErrorKind::ConfigParse: return "ConfigParse";
    case ErrorKind::ConfigSchema: return "ConfigSchema";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace taw
