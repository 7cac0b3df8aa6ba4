#include "qimrag/embedding.hpp"

#include <cmath>

#include "qimrag/error.hpp"
#include "qimrag/rng.hpp"

namespace qimrag {

namespace {

bool is_token_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_token_byte(c)) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

EmbeddingVector det_embed(std::string_view text, std::size_t dimension) {
    if (dimension == 0) {
        throw Error(ErrorCode::invalid_argument, "embedding dimension must be at least 1");
    }
    EmbeddingVector sum(dimension, 0.0);
    const auto tokens = tokenize(text);
    if (tokens.empty()) {
        return sum;
    }
    for (const std::string& token : tokens) {
        SplitMix64 stream(fnv1a64(token));
        for (auto& v : sum) {
            v += stream.next_signed_unit();
        }
    }
    double norm = 0.0;
    for (const double v : sum) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        return EmbeddingVector(dimension, 0.0);
    }
    for (auto& v : sum) {
        v /= norm;
    }
    return sum;
}

bool is_degenerate(std::span<const double> embedding) noexcept {
    for (const double v : embedding) {
        if (v != 0.0) {
            return false;
        }
    }
    return true;
}

}  // namespace qimrag
