#include "ihope/error.hpp"

namespace ihope {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::MalformedValue: return "MalformedValue";
        case ErrorCode::DuplicateUserDate: return "DuplicateUserDate";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::EmptyFeature: return "EmptyFeature";
        case ErrorCode::TooFewRecords: return "TooFewRecords";
        case ErrorCode::UnknownFeature: return "UnknownFeature";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::MissingThreshold: return "MissingThreshold";
        case ErrorCode::SilhouetteUndefined: return "SilhouetteUndefined";
        case ErrorCode::EmptyData: return "EmptyData";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace ihope
