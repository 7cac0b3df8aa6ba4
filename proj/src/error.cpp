#include "qimrag/error.hpp"

namespace qimrag {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::dimension_mismatch: return "dimension mismatch";
        case ErrorCode::degenerate_embedding: return "degenerate embedding";
        case ErrorCode::duplicate_name: return "duplicate name";
        case ErrorCode::not_found: return "not found";
        case ErrorCode::empty_collection: return "empty collection";
        case ErrorCode::corrupt_file: return "corrupt file";
        case ErrorCode::version_mismatch: return "version mismatch";
        case ErrorCode::io_failure: return "i/o failure";
        case ErrorCode::provider_failure: return "provider failure";
        case ErrorCode::budget_exhausted: return "budget exhausted";
        case ErrorCode::evaluation_failed: return "evaluation failed";
    }
    return "unknown error";
}

}  // namespace qimrag
