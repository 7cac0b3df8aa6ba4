#include "qimrag/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>

#include "qimrag/embedding.hpp"
#include "qimrag/error.hpp"
#include "qimrag/similarity.hpp"
#include "text_util.hpp"

namespace qimrag::eval {

double score_pair(std::string_view answer, std::string_view reference, Embedder& embedder) {
    const auto a = embedder.embed(answer);
    const auto b = embedder.embed(reference);
    if (is_degenerate(a) || is_degenerate(b)) {
        throw Error(ErrorCode::degenerate_embedding, "cannot score text that embeds to the zero vector");
    }
    return cosine_similarity(a, b);
}

EvalSummary aggregate(std::vector<EvalRow> rows) {
    if (rows.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "aggregation needs at least two rows");
    }
    // Welford running mean and sum of squares.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (const EvalRow& row : rows) {
        if (!std::isfinite(row.score)) {
            throw Error(ErrorCode::invalid_argument, "score for " + row.doc_id + " is not finite");
        }
        ++n;
        const double delta = row.score - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (row.score - mean);
    }
    EvalSummary summary;
    summary.ave = mean;
    summary.sd = std::sqrt(std::max(0.0, m2) / static_cast<double>(n - 1));
    summary.rows = std::move(rows);
    return summary;
}

double round_half_up(double value, int decimals) {
    if (decimals < 0 || decimals > 15) {
        throw Error(ErrorCode::invalid_argument, "decimals must be in [0, 15]");
    }
    const double scale = std::pow(10.0, decimals);
    const double scaled = std::fabs(value) * scale;
    const double snapped = std::round(scaled * 1e9) / 1e9;
    return std::copysign(std::floor(snapped + 0.5) / scale, value);
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, round_half_up(value, decimals), std::chars_format::fixed,
                                   decimals);
    std::string out(buf, res.ptr);
    if (out.starts_with('-') && out.find_first_not_of("-0.") == std::string::npos) {
        out.erase(0, 1);
    }
    return out;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<EvalRow> score_directories(const std::filesystem::path& answers, const std::filesystem::path& references,
                                       Embedder& embedder) {
    if (!std::filesystem::is_directory(references)) {
        throw Error(ErrorCode::io_failure, references.string() + " is not a directory");
    }
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(references)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            ids.push_back(entry.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
        const auto na = detail::parse_int<long long>(a);
        const auto nb = detail::parse_int<long long>(b);
        if (na && nb) {
            return *na < *nb;
        }
        if (na.has_value() != nb.has_value()) {
            return na.has_value();
        }
        return a < b;
    });
    std::vector<EvalRow> rows;
    for (const std::string& id : ids) {
        const auto answer = read_file(answers / (id + ".txt"));
        const auto reference = read_file(references / (id + ".txt"));
        try {
            rows.push_back({id, score_pair(answer, reference, embedder)});
        } catch (const Error& e) {
            throw Error(e.code(), "document " + id + ": " + e.what());
        }
    }
    return rows;
}

std::string report_csv(const EvalSummary& summary) {
    std::string out = "doc_id,score\n";
    for (const EvalRow& row : summary.rows) {
        out += row.doc_id + "," + detail::format_shortest(row.score) + "\n";
    }
    out += "# n," + std::to_string(summary.rows.size()) + "\n";
    out += "# ave," + format_fixed(summary.ave) + "\n";
    out += "# sd," + format_fixed(summary.sd) + "\n";
    return out;
}

void write_report(const EvalSummary& summary, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
    }
    out << report_csv(summary);
    if (!out.flush()) {
        throw Error(ErrorCode::io_failure, "write failed for " + path.string());
    }
}

}  // namespace qimrag::eval
