#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geh {

enum class ErrorKind {
    // ingest
    MissingLead,
    LengthMismatch,
    BadHeader,
    NonFiniteSample,
    BadFiducials,
    TooFewBeats,
    WindowOutOfRange,
    MissingFiducial,
    // features
    EmptyWindow,
    ZeroVector,
    // cohort / statistics
    SchemaError,
    DuplicateId,
    MissingFeature,
    EmptyGroup,
    DegenerateTable,
    // learning / evaluation
    SingleClass,
    EmptyMatrix,
    WidthMismatch,
    TooSmall,
    TooFewPerClass,
    NoPositives,
    // plumbing
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace geh
