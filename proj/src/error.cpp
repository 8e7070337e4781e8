#include "p2c/error.hpp"

namespace p2c {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DuplicateRecord: return "DuplicateRecord";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Authentication: return "Authentication";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::Network: return "Network";
    case ErrorCode::HttpStatus: return "HttpStatus";
    case ErrorCode::MissingFixture: return "MissingFixture";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::LabelConflict: return "LabelConflict";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::Unformalized: return "Unformalized";
    case ErrorCode::Statistics: return "Statistics";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
    switch (code) {
    case ErrorCode::Authentication:
    case ErrorCode::RateLimited:
    case ErrorCode::Timeout:
    case ErrorCode::Network:
    case ErrorCode::HttpStatus:
    case ErrorCode::MissingFixture:
        return ErrorCategory::Backend;
    case ErrorCode::CountMismatch:
    case ErrorCode::UnknownLabel:
    case ErrorCode::LabelConflict:
    case ErrorCode::SyntaxError:
    case ErrorCode::Unformalized:
    case ErrorCode::Statistics:
        return ErrorCategory::Parse;
    default:
        return ErrorCategory::Input;
    }
}

int exit_code_for(ErrorCode code) {
    switch (category_of(code)) {
    case ErrorCategory::Input: return 1;
    case ErrorCategory::Backend: return 2;
    case ErrorCategory::Parse: return 3;
    }
    return 1;
}

}  // namespace p2c
