#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace p2c {

enum class ErrorCode {
    // input / configuration
    Io,
    MalformedInput,
    MissingField,
    DuplicateRecord,
    InvalidArgument,
    Config,
    // backend
    Authentication,
    RateLimited,
    Timeout,
    Network,
    HttpStatus,
    MissingFixture,
    // formalization / validation
    CountMismatch,
    UnknownLabel,
    LabelConflict,
    SyntaxError,
    Unformalized,
    Statistics,
};

enum class ErrorCategory { Input, Backend, Parse };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

/// Process exit status for an error category: 1 input/config, 2 backend, 3 parse/validation.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }

    // Machine-usable payload; the request hash for MissingFixture, the
    // offending line for SyntaxError, the field name for MissingField.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace p2c
