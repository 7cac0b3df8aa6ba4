#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qimrag/providers.hpp"

namespace qimrag::eval {

struct EvalRow {
    std::string doc_id;
    double score = 0.0;
};

struct EvalSummary {
    std::vector<EvalRow> rows;
    double ave = 0.0;
    double sd = 0.0;  // sample standard deviation, divisor N - 1
};

/// Cosine similarity of the two embeddings. Throws degenerate_embedding when
/// either text embeds to the zero vector.
double score_pair(std::string_view answer, std::string_view reference, Embedder& embedder);

/// Needs at least two rows. Values are left unrounded.
EvalSummary aggregate(std::vector<EvalRow> rows);

/// Rounds half away from zero at the given number of decimals, after first
/// snapping off binary noise below 1e-9 of a unit in the last place.
double round_half_up(double value, int decimals = 3);

/// Fixed-point text with exactly `decimals` digits after the point.
std::string format_fixed(double value, int decimals = 3);

/// Scores every `<doc_id>.txt` in references against the same-named file in
/// answers, in doc_id order. A missing answer file is an io_failure.
std::vector<EvalRow> score_directories(const std::filesystem::path& answers, const std::filesystem::path& references,
                                       Embedder& embedder);

/// `doc_id,score` rows, then `# n,`, `# ave,` and `# sd,` footer lines with
/// the summary rounded to three decimals.
std::string report_csv(const EvalSummary& summary);
void write_report(const EvalSummary& summary, const std::filesystem::path& path);

}  // namespace qimrag::eval
