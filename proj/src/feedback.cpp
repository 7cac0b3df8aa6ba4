#include "qimrag/feedback.hpp"

#include <json.hpp>

#include "qimrag/error.hpp"

namespace qimrag {

using nlohmann::json;

std::string to_json_line(const FeedbackRecord& record) {
    json j = {{"id", record.id},
              {"question", record.question},
              {"final_answer", record.final_answer},
              {"reference_ids", record.reference_ids},
              {"rating", record.rating},
              {"timestamp", record.timestamp}};
    j["comment"] = record.comment ? json(*record.comment) : json(nullptr);
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

FeedbackRecord feedback_from_json_line(const std::string& line) {
    try {
        const json j = json::parse(line);
        FeedbackRecord r;
        r.id = j.at("id").get<std::string>();
        r.question = j.at("question").get<std::string>();
        r.final_answer = j.at("final_answer").get<std::string>();
        r.reference_ids = j.at("reference_ids").get<std::vector<std::string>>();
        r.rating = j.at("rating").get<int>();
        r.timestamp = j.at("timestamp").get<std::int64_t>();
        if (j.contains("comment") && !j["comment"].is_null()) {
            r.comment = j["comment"].get<std::string>();
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, "malformed feedback record: " + std::string(e.what()));
    }
}

}  // namespace qimrag
