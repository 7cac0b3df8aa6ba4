#include "qimrag/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <utility>

#include "qimrag/error.hpp"
#include "qimrag/rng.hpp"
#include "text_util.hpp"

namespace qimrag {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_continuation(char c) {
    return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

}  // namespace

std::vector<TextChunk> chunk_text(std::string_view doc_id, std::string_view text, std::size_t max_chars,
                                  std::size_t overlap_chars) {
    if (max_chars <= overlap_chars) {
        throw Error(ErrorCode::invalid_argument, "max_chars must exceed overlap_chars");
    }
    std::vector<TextChunk> chunks;
    std::size_t start = 0;
    while (start < text.size()) {
        if (text.size() - start <= max_chars) {
            chunks.push_back({std::string(doc_id), chunks.size(), start, std::string(text.substr(start))});
            break;
        }
        const std::size_t end = start + max_chars;
        // The cut must leave the next chunk starting after this one.
        const std::size_t floor_cut = start + overlap_chars + 1;
        const std::size_t lookback_floor = std::max(floor_cut, end > whitespace_lookback ? end - whitespace_lookback : 0);

        std::size_t cut = 0;
        for (std::size_t c = end; c >= lookback_floor && c > start; --c) {
            if (is_space(text[c - 1])) {
                cut = c;
                break;
            }
        }
        if (cut == 0) {
            cut = end;
            while (cut > floor_cut && is_continuation(text[cut])) {
                --cut;
            }
        }
        chunks.push_back({std::string(doc_id), chunks.size(), start, std::string(text.substr(start, cut - start))});

        start = cut - overlap_chars;
        while (start > 0 && is_continuation(text[start])) {
            --start;
        }
    }
    return chunks;
}

std::string reconstruct(std::span<const TextChunk> chunks) {
    std::string out;
    for (const TextChunk& chunk : chunks) {
        if (chunk.offset > out.size()) {
            throw Error(ErrorCode::invalid_argument, "chunks leave a gap");
        }
        const std::size_t skip = out.size() - chunk.offset;
        if (skip < chunk.text.size()) {
            out.append(chunk.text, skip);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string normalize_field(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (const char c : raw) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace

QAPair QAPair::make(std::string_view question, std::string_view answer, std::string source_doc_id,
                    PairOrigin origin) {
    QAPair pair{normalize_field(question), normalize_field(answer), std::move(source_doc_id), origin};
    if (pair.question.empty() || pair.answer.empty()) {
        throw Error(ErrorCode::invalid_argument, "question and answer must be nonempty");
    }
    for (const std::string* field : {&pair.question, &pair.answer}) {
        if (field->find(human_marker) != std::string::npos ||
            field->find(assistant_marker) != std::string::npos) {
            throw Error(ErrorCode::invalid_argument, "Q&A text must not contain Human/Assistant markers");
        }
    }
    return pair;
}

std::string to_guanaco_line(const QAPair& pair) {
    std::string line;
    line.reserve(pair.question.size() + pair.answer.size() + 28);
    line.append(human_marker).append(" ").append(pair.question);
    line.append(" ").append(assistant_marker).append(" ").append(pair.answer);
    return line;
}

std::optional<QAPair> parse_guanaco_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    const std::string prefix = std::string(human_marker) + " ";
    const std::string separator = " " + std::string(assistant_marker) + " ";
    if (!line.starts_with(prefix)) {
        return std::nullopt;
    }
    const auto sep = line.find(separator, prefix.size());
    if (sep == std::string_view::npos) {
        return std::nullopt;
    }
    const auto question = line.substr(prefix.size(), sep - prefix.size());
    const auto answer = line.substr(sep + separator.size());
    if (question.empty() || answer.empty()) {
        return std::nullopt;
    }
    try {
        return QAPair::make(question, answer, "", PairOrigin::generated);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::string qa_generation_prompt(std::string_view chunk_text, std::size_t pairs) {
    std::string prompt;
    prompt += "[";
    prompt += qa_prompt_version;
    prompt += "]\n";
    prompt += "You are a helpful assistant that prepares training data for a question-answering chatbot. ";
    prompt += "Read the content below and write up to " + std::to_string(pairs) +
              " question-answer pairs that a visitor might ask, answered only from that content. ";
    prompt += "Put each pair on its own line in exactly this form:\n";
    prompt += "### Human: <question> ### Assistant: <answer>\n";
    prompt += "Do not number the lines and do not add any other text.\n";
    prompt += "<content>\n";
    prompt += chunk_text;
    prompt += "\n</content>\n";
    return prompt;
}

QAGeneration generate_qa(const TextChunk& chunk, Generator& generator, std::size_t pairs_per_chunk) {
    if (pairs_per_chunk == 0) {
        throw Error(ErrorCode::invalid_argument, "pairs_per_chunk must be positive");
    }
    const std::string output = generator.generate(qa_generation_prompt(chunk.text, pairs_per_chunk));
    QAGeneration result;
    for (const auto raw : detail::split(output, '\n')) {
        if (result.pairs.size() == pairs_per_chunk) {
            break;
        }
        const auto line = detail::trim(raw);
        if (line.empty()) {
            continue;
        }
        if (auto pair = parse_guanaco_line(line)) {
            pair->source_doc_id = chunk.doc_id;
            result.pairs.push_back(std::move(*pair));
        } else {
            ++result.discarded;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------

DatasetBundle split_dataset(std::vector<QAPair> pairs, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "split ratio must be in (0, 1)");
    }
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<QAPair> unique;
    for (QAPair& p : pairs) {
        if (seen.emplace(p.question, p.answer).second) {
            unique.push_back(std::move(p));
        }
    }
    if (unique.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "need at least two distinct pairs to split");
    }
    SplitMix64 rng(seed);
    for (std::size_t i = unique.size() - 1; i > 0; --i) {
        std::swap(unique[i], unique[rng.next_below(i + 1)]);
    }
    // The small slack keeps products like 0.7 * 10 from rounding up past an integer.
    const auto n_train = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(unique.size()) - 1e-9));

    DatasetBundle bundle;
    bundle.split_seed = seed;
    bundle.split_ratio = ratio;
    bundle.train.assign(std::make_move_iterator(unique.begin()),
                        std::make_move_iterator(unique.begin() + static_cast<std::ptrdiff_t>(n_train)));
    bundle.test.assign(std::make_move_iterator(unique.begin() + static_cast<std::ptrdiff_t>(n_train)),
                       std::make_move_iterator(unique.end()));
    return bundle;
}

std::string guanaco_text(std::span<const QAPair> pairs) {
    std::string out;
    for (const QAPair& p : pairs) {
        out += to_guanaco_line(p);
        out += '\n';
    }
    return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
    }
    out << content;
    out.flush();
    if (!out) {
        throw Error(ErrorCode::io_failure, "write failed for " + path.string());
    }
}

}  // namespace

ExportPaths export_guanaco(const DatasetBundle& bundle, const std::filesystem::path& directory,
                           std::string_view name) {
    ExportPaths paths{directory / (std::string(name) + ".train.txt"),
                      directory / (std::string(name) + ".test.txt")};
    write_text(paths.train, guanaco_text(bundle.train));
    write_text(paths.test, guanaco_text(bundle.test));
    return paths;
}

std::vector<QAPair> parse_guanaco_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    std::vector<QAPair> pairs;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        auto pair = parse_guanaco_line(line);
        if (!pair) {
            throw Error(ErrorCode::corrupt_file,
                        path.string() + ":" + std::to_string(number) + " is not a Human/Assistant line");
        }
        pairs.push_back(std::move(*pair));
    }
    return pairs;
}

DatasetBundle merge_feedback(DatasetBundle bundle, std::span<const FeedbackRecord> feedback, int min_rating) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto* part : {&bundle.train, &bundle.test}) {
        for (const QAPair& p : *part) {
            seen.emplace(p.question, p.answer);
        }
    }
    for (const FeedbackRecord& record : feedback) {
        if (record.rating < min_rating) {
            continue;
        }
        QAPair pair;
        try {
            pair = QAPair::make(record.question, record.final_answer, "feedback", PairOrigin::feedback);
        } catch (const Error&) {
            continue;
        }
        if (seen.emplace(pair.question, pair.answer).second) {
            bundle.train.push_back(std::move(pair));
        }
    }
    return bundle;
}

}  // namespace qimrag
