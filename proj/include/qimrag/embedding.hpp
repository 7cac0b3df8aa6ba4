#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qimrag/similarity.hpp"

namespace qimrag {

/// Lowercased ASCII-alphanumeric tokens; bytes >= 0x80 count as token
/// characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// Deterministic offline embedding. Each token's FNV-1a hash seeds a splitmix64
/// stream of `dimension` values in [-1, 1); token vectors are summed and the
/// sum L2-normalized. Text without tokens yields the zero vector.
EmbeddingVector det_embed(std::string_view text, std::size_t dimension);

/// True for the zero vector det_embed returns on token-free text.
bool is_degenerate(std::span<const double> embedding) noexcept;

}  // namespace qimrag
