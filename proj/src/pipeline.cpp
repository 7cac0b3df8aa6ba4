#include "qimrag/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "qimrag/embedding.hpp"
#include "qimrag/error.hpp"

namespace qimrag {

std::vector<RankedResult> judge_rerank(std::span<const double> query_embedding,
                                       std::vector<RankedResult> results, std::size_t q) {
    for (RankedResult& r : results) {
        if (r.chunk.embedding.size() != query_embedding.size()) {
            throw Error(ErrorCode::dimension_mismatch,
                        "candidate '" + r.chunk.chunk_id + "' does not match the query dimension");
        }
        r.qim_score = qim(query_embedding, r.chunk.embedding, q);
    }
    std::stable_sort(results.begin(), results.end(), [](const RankedResult& a, const RankedResult& b) {
        if (*a.qim_score != *b.qim_score) {
            return *a.qim_score > *b.qim_score;
        }
        if (a.cosine != b.cosine) {
            return a.cosine > b.cosine;
        }
        return a.chunk.chunk_id < b.chunk.chunk_id;
    });
    return results;
}

std::string compose_combined_prompt(std::string_view question, std::string_view answer1,
                                    std::string_view answer2) {
    if (question.empty()) {
        throw Error(ErrorCode::invalid_argument, "question must be nonempty");
    }
    auto or_unavailable = [](std::string_view s) {
        return s.empty() ? std::string("[unavailable]") : std::string(s);
    };
    std::string prompt;
    prompt += "[";
    prompt += combined_prompt_version;
    prompt += "]\n";
    prompt +=
        "System: You are a helpful assistant. Answer the question using the two contexts below. "
        "Prefer facts from Context A; use Context B to fill gaps. Say so when neither context "
        "answers the question.\n";
    prompt += "Question: ";
    prompt += question;
    prompt += "\nContext A (retrieved): ";
    prompt += or_unavailable(answer1);
    prompt += "\nContext B (fine-tuned model): ";
    prompt += or_unavailable(answer2);
    prompt += "\nAnswer:";
    return prompt;
}

std::string concatenate_references(std::span<const RankedResult> references, std::size_t cap) {
    std::string out;
    for (const RankedResult& r : references) {
        const std::size_t sep = out.empty() ? 0 : 2;
        if (out.size() + sep + r.chunk.text.size() > cap) {
            if (out.empty()) {
                out = r.chunk.text.substr(0, cap);
            }
            break;
        }
        if (sep) {
            out += "\n\n";
        }
        out += r.chunk.text;
    }
    return out;
}

void AnswerOptions::validate() const {
    if (k < 1) {
        throw Error(ErrorCode::invalid_argument, "k must be at least 1");
    }
    if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
        throw Error(ErrorCode::invalid_argument, "threshold must be a finite nonnegative number");
    }
    if (q < min_bin_count || q > max_bin_count) {
        throw Error(ErrorCode::invalid_argument, "q must be in [2, 256]");
    }
    if (min_qim && !(*min_qim >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "min_qim must be nonnegative");
    }
}

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink), start_(Clock::now()) {}

    void lap(std::string stage) {
        const auto now = Clock::now();
        sink_.push_back({std::move(stage), std::chrono::duration<double, std::milli>(now - start_).count()});
        start_ = now;
    }

private:
    using Clock = std::chrono::steady_clock;
    std::vector<StageTiming>& sink_;
    Clock::time_point start_;
};

}  // namespace

PipelineAnswer answer(std::string_view question, const Collection& collection,
                      const ProviderSet& providers, const AnswerOptions& options) {
    options.validate();
    if (question.empty()) {
        throw Error(ErrorCode::invalid_argument, "question must be nonempty");
    }
    PipelineAnswer result;
    result.question = std::string(question);
    StageClock clock(result.timings);

    const EmbeddingVector query = providers.embedder->embed(question);
    clock.lap("embed");
    if (is_degenerate(query)) {
        result.outcome = AnswerOutcome::no_relevant_content;
        result.final_answer = std::string(no_relevant_content_message);
        return result;
    }

    const auto candidates = collection.query_topk(query, options.k);
    clock.lap("retrieve");
    auto survivors = filter_by_distance(candidates, options.threshold);
    clock.lap("filter");
    survivors = judge_rerank(query, std::move(survivors), options.q);
    if (options.min_qim) {
        std::erase_if(survivors, [&](const RankedResult& r) { return *r.qim_score < *options.min_qim; });
    }
    clock.lap("rerank");

    if (survivors.empty()) {
        result.outcome = AnswerOutcome::no_relevant_content;
        result.final_answer = std::string(no_relevant_content_message);
        return result;
    }
    result.references = std::move(survivors);
    result.answer1 = concatenate_references(result.references);

    try {
        result.answer2 = providers.fine_tuned->generate(question);
    } catch (const std::exception& e) {
        result.degraded = true;
        result.degradation_reason = std::string("fine-tuned provider: ") + e.what();
    }
    clock.lap("fine_tuned");

    try {
        result.final_answer =
            providers.foundational->generate(compose_combined_prompt(question, result.answer1, result.answer2));
        if (result.final_answer.empty()) {
            throw Error(ErrorCode::provider_failure, "empty completion");
        }
    } catch (const std::exception& e) {
        result.degraded = true;
        if (!result.degradation_reason.empty()) {
            result.degradation_reason += "; ";
        }
        result.degradation_reason += std::string("foundational provider: ") + e.what();
        result.final_answer = result.answer1;
    }
    clock.lap("foundational");
    return result;
}

}  // namespace qimrag
