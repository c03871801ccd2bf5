#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ihope {

enum class ErrorCode {
    MissingColumn,
    MalformedValue,
    DuplicateUserDate,
    OutOfRange,
    EmptyFeature,
    TooFewRecords,
    UnknownFeature,
    DegenerateInput,
    MissingThreshold,
    SilhouetteUndefined,
    EmptyData,
    ArityMismatch,
    NonFiniteInput,
    InvalidConfig,
    LengthMismatch,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for every recoverable failure in the library.
/// The code is the machine-readable part; what() carries context such as
/// file, row and column.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ihope
