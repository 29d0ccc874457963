#include "geh/error.hpp"

namespace geh {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MissingLead: return "MissingLead";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::BadHeader: return "BadHeader";
        case ErrorKind::NonFiniteSample: return "NonFiniteSample";
        case ErrorKind::BadFiducials: return "BadFiducials";
        case ErrorKind::TooFewBeats: return "TooFewBeats";
        case ErrorKind::WindowOutOfRange: return "WindowOutOfRange";
        case ErrorKind::MissingFiducial: return "MissingFiducial";
        case ErrorKind::EmptyWindow: return "EmptyWindow";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::MissingFeature: return "MissingFeature";
        case ErrorKind::EmptyGroup: return "EmptyGroup";
        case ErrorKind::DegenerateTable: return "DegenerateTable";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::EmptyMatrix: return "EmptyMatrix";
        case ErrorKind::WidthMismatch: return "WidthMismatch";
        case ErrorKind::TooSmall: return "TooSmall";
        case ErrorKind::TooFewPerClass: return "TooFewPerClass";
        case ErrorKind::NoPositives: return "NoPositives";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace geh
