#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace qimrag::simlab {

struct SweepConfig {
    std::size_t n = 1000;
    std::vector<double> k_values;  // ascending, each >= 0
    std::size_t q = 16;
    std::uint64_t seed = 0;
    std::size_t trials_per_k = 25;

    void validate() const;
};

struct SweepRecord {
    std::size_t n = 0;
    double k = 0.0;
    std::size_t trial = 0;
    double cosine = 0.0;
    double qim = 0.0;

    bool operator==(const SweepRecord&) const = default;
};

/// 0, step, 2*step, ... up to and including k_max (within half a step).
std::vector<double> k_grid(double k_max, double k_step);

/// Perturbation sweep: for every k and trial, a ~ U(0,1)^n, noise ~ U(0,1)^n,
/// b = a + k * noise; records cosine(a, b) and qim(a, b, q). The stream for
/// (k index, trial) is keyed from the seed, so output depends only on cfg.
std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

/// Header `n,k,trial,cosine,qim`; reals with 17 significant digits.
void write_csv(std::span<const SweepRecord> records, const std::filesystem::path& path);
std::vector<SweepRecord> read_csv(const std::filesystem::path& path);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct KSummary {
    double k = 0.0;
    double mean_cosine = 0.0;
    double mean_qim = 0.0;
    double max_qim = 0.0;
};

/// Per-k aggregates in ascending k order.
std::vector<KSummary> summarize_by_k(std::span<const SweepRecord> records);

}  // namespace qimrag::simlab
