#include "lgaze/error.hpp"

namespace lgaze {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegeneratePose: return "DegeneratePose";
    case ErrorKind::PointAtInfinity: return "PointAtInfinity";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::GimbalDegenerate: return "GimbalDegenerate";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::PointBehindCamera: return "PointBehindCamera";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroPrediction: return "ZeroPrediction";
    case ErrorKind::StaleTape: return "StaleTape";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::MissingModel: return "MissingModel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorKind::EmptySplitProduced: return "EmptySplitProduced";
    case ErrorKind::RejectionLimit: return "RejectionLimit";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace lgaze
