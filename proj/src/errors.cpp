#include "cvtalloc/errors.hpp"

namespace cvtalloc {

std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::UnboundFreeParameter: return "UnboundFreeParameter";
    case ErrorKind::QuadratureNonConvergence: return "QuadratureNonConvergence";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::NoFreeParameter: return "NoFreeParameter";
    case ErrorKind::InvalidParameterValue: return "InvalidParameterValue";
    case ErrorKind::InvalidDensitySpec: return "InvalidDensitySpec";
    case ErrorKind::UnsortedGenerators: return "UnsortedGenerators";
    case ErrorKind::GeneratorOutOfDomain: return "GeneratorOutOfDomain";
    case ErrorKind::DuplicateGenerators: return "DuplicateGenerators";
    case ErrorKind::InvalidDomain: return "InvalidDomain";
    case ErrorKind::CellsDoNotTile: return "CellsDoNotTile";
    case ErrorKind::InvalidCandidate: return "InvalidCandidate";
    case ErrorKind::InfeasibleProblem: return "InfeasibleProblem";
    case ErrorKind::DomainTooNarrow: return "DomainTooNarrow";
    case ErrorKind::MissingDesiredInput: return "MissingDesiredInput";
    case ErrorKind::UnknownAgent: return "UnknownAgent";
    case ErrorKind::NonHurwitz: return "NonHurwitz";
    case ErrorKind::Uncontrollable: return "Uncontrollable";
    case ErrorKind::InvalidScenario: return "InvalidScenario";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace cvtalloc
