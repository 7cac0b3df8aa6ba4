#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qimrag/feedback.hpp"
#include "qimrag/providers.hpp"

namespace qimrag {

inline constexpr std::size_t default_chunk_chars = 800;
inline constexpr std::size_t default_chunk_overlap = 80;
inline constexpr std::size_t whitespace_lookback = 32;

struct TextChunk {
    std::string doc_id;
    std::size_t ordinal = 0;
    std::size_t offset = 0;  // byte offset of text within the source document
    std::string text;
};

/// Splits text into chunks of at most max_chars bytes. Consecutive chunks
/// share overlap_chars bytes (a few more when a cut would split a UTF-8
/// sequence). A cut prefers to land just after whitespace found within the
/// last 32 bytes of the window; otherwise it is a hard split at max_chars.
std::vector<TextChunk> chunk_text(std::string_view doc_id, std::string_view text,
                                  std::size_t max_chars = default_chunk_chars,
                                  std::size_t overlap_chars = default_chunk_overlap);

/// Inverse of chunk_text: overlap removed by offsets.
std::string reconstruct(std::span<const TextChunk> chunks);

enum class PairOrigin { generated, feedback };

struct QAPair {
    std::string question;
    std::string answer;
    std::string source_doc_id;
    PairOrigin origin = PairOrigin::generated;

    /// Collapses whitespace runs (newlines included) to single spaces and trims.
    /// Throws invalid_argument when a field ends up empty or contains a
    /// Human/Assistant marker.
    static QAPair make(std::string_view question, std::string_view answer, std::string source_doc_id,
                       PairOrigin origin);

    bool same_text(const QAPair& other) const {
        return question == other.question && answer == other.answer;
    }
};

inline constexpr std::string_view human_marker = "### Human:";
inline constexpr std::string_view assistant_marker = "### Assistant:";

/// `### Human: {question} ### Assistant: {answer}`
std::string to_guanaco_line(const QAPair& pair);
/// Parses one line of the grammar `^### Human: .+ ### Assistant: .+$`.
std::optional<QAPair> parse_guanaco_line(std::string_view line);

inline constexpr std::string_view qa_prompt_version = "qa-prompt/v1";

std::string qa_generation_prompt(std::string_view chunk_text, std::size_t pairs);

struct QAGeneration {
    std::vector<QAPair> pairs;
    std::size_t discarded = 0;  // nonblank lines that failed to parse
    bool no_pairs() const { return pairs.empty(); }
};

/// Asks the generator for Q&A lines about one chunk; keeps at most
/// pairs_per_chunk. Provider failures propagate as Error(provider_failure).
QAGeneration generate_qa(const TextChunk& chunk, Generator& generator, std::size_t pairs_per_chunk);

inline constexpr double default_split_ratio = 0.9;

struct DatasetBundle {
    std::vector<QAPair> train;
    std::vector<QAPair> test;
    std::uint64_t split_seed = 0;
    double split_ratio = default_split_ratio;
};

/// Drops duplicate (question, answer) pairs, shuffles with a seeded
/// splitmix64 Fisher-Yates pass and puts the first ceil(ratio * N) in train.
DatasetBundle split_dataset(std::vector<QAPair> pairs, double ratio, std::uint64_t seed);

struct ExportPaths {
    std::filesystem::path train;
    std::filesystem::path test;
};

/// Writes `<name>.train.txt` and `<name>.test.txt` into directory.
ExportPaths export_guanaco(const DatasetBundle& bundle, const std::filesystem::path& directory,
                           std::string_view name);
std::string guanaco_text(std::span<const QAPair> pairs);
/// Throws corrupt_file on a line outside the grammar.
std::vector<QAPair> parse_guanaco_file(const std::filesystem::path& path);

/// Feedback rated at least min_rating joins train as origin=feedback pairs,
/// skipping any (question, answer) already in train or test.
DatasetBundle merge_feedback(DatasetBundle bundle, std::span<const FeedbackRecord> feedback, int min_rating);

}  // namespace qimrag
