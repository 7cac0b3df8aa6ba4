#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qimrag {

/// Dense real-valued embedding. Entries must be finite; the dimension is fixed
/// per collection.
using EmbeddingVector = std::vector<double>;

/// Bin count range accepted from configuration surfaces (CLI, HTTP options).
inline constexpr std::size_t min_bin_count = 2;
inline constexpr std::size_t max_bin_count = 256;
inline constexpr std::size_t default_bin_count = 16;

/// Equal-width partition of a real array.
struct BinPartition {
    std::size_t q_requested = 0;
    std::vector<double> edges;         // q_requested + 1 ascending values
    std::vector<std::size_t> labels;   // one bin index per source element
    std::vector<std::size_t> occupied; // ascending, exactly the labels present
};

struct BinStats {
    std::size_t label = 0;
    std::size_t count = 0;
    double local_mean = 0.0;
};

/// Per-bin and global moments of y over a partition.
struct PartitionStats {
    std::vector<BinStats> bins;  // occupied bins only, ascending by label
    std::size_t n = 0;
    double global_mean = 0.0;
    double sigma = 0.0;          // population standard deviation
    double proportion_ones = 0.0; // meaningful for binary y only
};

/// a.b / (|a| |b|), clamped to [-1, 1].
///
/// Sums are carried in double-double precision and rounded once, so the result
/// is invariant under positive scaling and element replication of both inputs.
/// Throws dimension_mismatch, degenerate_embedding (zero norm) or
/// invalid_argument (non-finite entry).
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Maps each element of x to one of q equal-width bins over [min(x), max(x)].
/// max(x) is clamped into bin q-1; a constant input lands entirely in bin 0.
BinPartition quantize(std::span<const double> x, std::size_t q);

/// Bin count for the "q-bit" reading of the quantization parameter (2^bits).
std::size_t bin_count_from_bits(std::size_t bits);

PartitionStats partition_stats(std::span<const std::size_t> labels, std::span<const double> y);

/// Quantized influence measure of reference y with respect to query x:
///
///   sum_i (ybar_i - ybar)^2 * N_i^2 / (|occupied| * sigma_y)
///
/// where the partition is quantize(x, q). Returns 0 when y is constant.
double qim(std::span<const double> x, std::span<const double> y, std::size_t q);

/// General influence score: sum over partition cells of n_j^2 (ybar_j - ybar)^2.
/// Labels may be arbitrary identifiers.
double iscore_general(std::span<const std::size_t> labels, std::span<const double> y);

/// Binary influence score: sum over cells of (n1(j) - n_j * pi1)^2. y must be 0/1.
double iscore_binary(std::span<const std::size_t> labels, std::span<const double> y);

/// iscore_general / (n * sigma_y^2). Throws on zero variance.
double normalized_iscore(std::span<const std::size_t> labels, std::span<const double> y);

/// Each element repeated m times in place: [a, b] -> [a, a, b, b] for m = 2.
std::vector<double> repeat_each(std::span<const double> values, std::size_t m);

}  // namespace qimrag
