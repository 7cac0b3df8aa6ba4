#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qimrag/providers.hpp"
#include "qimrag/vector_store.hpp"

namespace qimrag {

/// Scores each candidate with qim(query, candidate embedding, q) and orders by
/// QIM descending, then cosine descending, then chunk_id ascending.
std::vector<RankedResult> judge_rerank(std::span<const double> query_embedding,
                                       std::vector<RankedResult> results, std::size_t q);

inline constexpr std::string_view combined_prompt_version = "combined-prompt/v1";

/// Foundational-model prompt merging retrieved context (A) with the fine-tuned
/// model's answer (B). Empty contexts render as "[unavailable]".
std::string compose_combined_prompt(std::string_view question, std::string_view answer1,
                                    std::string_view answer2);

inline constexpr std::size_t answer1_char_cap = 4000;

/// Reference texts joined by blank lines. Whole chunks only while they fit in
/// cap; a first chunk longer than cap is cut at cap.
std::string concatenate_references(std::span<const RankedResult> references,
                                   std::size_t cap = answer1_char_cap);

struct AnswerOptions {
    std::size_t k = 5;
    double threshold = default_distance_threshold;
    std::size_t q = default_bin_count;
    std::optional<double> min_qim;  // off by default: the judge only re-orders

    void validate() const;
};

enum class AnswerOutcome { answered, no_relevant_content };

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;
};

struct PipelineAnswer {
    std::string question;
    AnswerOutcome outcome = AnswerOutcome::answered;
    bool degraded = false;
    std::string degradation_reason;
    std::string answer1;
    std::vector<RankedResult> references;  // post-filter, judge order
    std::string answer2;
    std::string final_answer;
    std::vector<StageTiming> timings;
};

inline constexpr std::string_view no_relevant_content_message =
    "No relevant content was found for this question.";

/// Embed, retrieve top-k, distance-filter, judge-rerank, then combine the
/// retrieved context with the fine-tuned answer through the foundational model.
/// Generator failures degrade the final answer to answer1; they never throw.
PipelineAnswer answer(std::string_view question, const Collection& collection,
                      const ProviderSet& providers, const AnswerOptions& options = {});

}  // namespace qimrag
