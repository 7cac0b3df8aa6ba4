#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qimrag {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    degenerate_embedding,
    duplicate_name,
    not_found,
    empty_collection,
    corrupt_file,
    version_mismatch,
    io_failure,
    provider_failure,
    budget_exhausted,
    evaluation_failed,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every library failure surfaces as this exception; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace qimrag
