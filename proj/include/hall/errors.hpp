#pragma once

#include <stdexcept>
#include <string>

namespace hall {

// Error vocabulary shared by all modules. Each code names the violated
// contract; the message carries the offending values.
enum class Err {
  NonCommensurate,
  FluxTooSmall,
  CoveringViolated,
  EvenScale,
  FluxMismatch,
  UnsupportedShift,
  BandsNotResolved,
  ConvergenceFailure,
  MonotoneViolated,
  QuadratureUnresolved,
  MissingConstant,
  DegenerateFermiLevel,
  SingularShift,
  GapViolated,
  NotInGap,
  InvalidS,
  EvenInitialScale,
  FieldTooWeak,
  ScaleRelationViolated,
  GeometryViolated,
  InsufficientDecay,
  EmptyRegime,
  DegenerateFermiCut,
  RegionTouchesSeam,
  UnstableStep,
  ConfigInvalid,
  MissingOutput,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::NonCommensurate: return "NonCommensurate";
    case Err::FluxTooSmall: return "FluxTooSmall";
    case Err::CoveringViolated: return "CoveringViolated";
    case Err::EvenScale: return "EvenScale";
    case Err::FluxMismatch: return "FluxMismatch";
    case Err::UnsupportedShift: return "UnsupportedShift";
    case Err::BandsNotResolved: return "BandsNotResolved";
    case Err::ConvergenceFailure: return "ConvergenceFailure";
    case Err::MonotoneViolated: return "MonotoneViolated";
    case Err::QuadratureUnresolved: return "QuadratureUnresolved";
    case Err::MissingConstant: return "MissingConstant";
    case Err::DegenerateFermiLevel: return "DegenerateFermiLevel";
    case Err::SingularShift: return "SingularShift";
    case Err::GapViolated: return "GapViolated";
    case Err::NotInGap: return "NotInGap";
    case Err::InvalidS: return "InvalidS";
    case Err::EvenInitialScale: return "EvenInitialScale";
    case Err::FieldTooWeak: return "FieldTooWeak";
    case Err::ScaleRelationViolated: return "ScaleRelationViolated";
    case Err::GeometryViolated: return "GeometryViolated";
    case Err::InsufficientDecay: return "InsufficientDecay";
    case Err::EmptyRegime: return "EmptyRegime";
    case Err::DegenerateFermiCut: return "DegenerateFermiCut";
    case Err::RegionTouchesSeam: return "RegionTouchesSeam";
    case Err::UnstableStep: return "UnstableStep";
    case Err::ConfigInvalid: return "ConfigInvalid";
    case Err::MissingOutput: return "MissingOutput";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Err code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace hall
