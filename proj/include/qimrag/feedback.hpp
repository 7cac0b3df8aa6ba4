#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qimrag {

inline constexpr int lowest_rating = 1;
inline constexpr int highest_rating = 5;

/// One user judgement of a served answer.
struct FeedbackRecord {
    std::string id;
    std::string question;
    std::string final_answer;
    std::vector<std::string> reference_ids;
    int rating = 0;  // 1..5
    std::optional<std::string> comment;
    std::int64_t timestamp = 0;  // UTC seconds

    bool operator==(const FeedbackRecord&) const = default;
};

/// One line of the feedback log (newline-delimited JSON, no trailing newline).
std::string to_json_line(const FeedbackRecord& record);
/// Throws invalid_argument on malformed JSON or missing fields.
FeedbackRecord feedback_from_json_line(const std::string& line);

}  // namespace qimrag
