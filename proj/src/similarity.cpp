#include "qimrag/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "double_double.hpp"
#include "qimrag/error.hpp"

namespace qimrag {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (const double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::invalid_argument, std::string(what) + " contains a non-finite value");
        }
    }
}

void require_same_length(std::size_t a, std::size_t b, ErrorCode code) {
    if (a != b) {
        throw Error(code, "length " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

double population_sigma(std::span<const double> y, double mean) {
    double ss = 0.0;
    for (const double v : y) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(y.size()));
}

double mean_of(std::span<const double> y) {
    double sum = 0.0;
    for (const double v : y) {
        sum += v;
    }
    return sum / static_cast<double>(y.size());
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    require_same_length(a.size(), b.size(), ErrorCode::dimension_mismatch);
    if (a.empty()) {
        throw Error(ErrorCode::invalid_argument, "empty vector");
    }
    require_finite(a, "a");
    require_finite(b, "b");

    using detail::DoubleDouble;
    DoubleDouble dot, norm_a, norm_b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot = detail::add(dot, detail::two_prod(a[i], b[i]));
        norm_a = detail::add(norm_a, detail::two_prod(a[i], a[i]));
        norm_b = detail::add(norm_b, detail::two_prod(b[i], b[i]));
    }
    if (norm_a.hi == 0.0 || norm_b.hi == 0.0) {
        throw Error(ErrorCode::degenerate_embedding, "zero-norm vector");
    }
    const DoubleDouble denom = detail::sqrt(detail::mul(norm_a, norm_b));
    const double cosine = detail::div(dot, denom).to_double();
    return std::clamp(cosine, -1.0, 1.0);
}

BinPartition quantize(std::span<const double> x, std::size_t q) {
    if (q == 0) {
        throw Error(ErrorCode::invalid_argument, "bin count must be positive");
    }
    require_finite(x, "x");

    BinPartition part;
    part.q_requested = q;
    part.labels.assign(x.size(), 0);
    if (x.empty()) {
        part.edges.assign(q + 1, 0.0);
        return part;
    }

    const auto [min_it, max_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *min_it;
    const double hi = *max_it;
    const double width = hi - lo;

    part.edges.resize(q + 1);
    for (std::size_t j = 0; j <= q; ++j) {
        part.edges[j] = lo + width * static_cast<double>(j) / static_cast<double>(q);
    }
    part.edges[q] = hi;

    std::vector<bool> seen(q, false);
    if (width > 0.0) {
        const auto bins = static_cast<double>(q);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double pos = std::floor((x[i] - lo) * bins / width);
            // NaN and overflow only arise from extreme ranges; both clamp.
            std::size_t bin = 0;
            if (pos >= bins) {
                bin = q - 1;
            } else if (pos > 0.0) {
                bin = static_cast<std::size_t>(pos);
            }
            part.labels[i] = bin;
            seen[bin] = true;
        }
    } else {
        seen[0] = true;
    }
    for (std::size_t j = 0; j < q; ++j) {
        if (seen[j]) {
            part.occupied.push_back(j);
        }
    }
    return part;
}

std::size_t bin_count_from_bits(std::size_t bits) {
    if (bits < 1 || bits > 8) {
        throw Error(ErrorCode::invalid_argument, "bit width must be in [1, 8]");
    }
    return std::size_t{1} << bits;
}

PartitionStats partition_stats(std::span<const std::size_t> labels, std::span<const double> y) {
    require_same_length(labels.size(), y.size(), ErrorCode::invalid_argument);
    PartitionStats stats;
    stats.n = y.size();
    if (y.empty()) {
        return stats;
    }

    std::map<std::size_t, std::pair<std::size_t, double>> cells;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto& [count, sum] = cells[labels[i]];
        ++count;
        sum += y[i];
        if (y[i] == 1.0) {
            ++ones;
        }
    }
    stats.bins.reserve(cells.size());
    for (const auto& [label, cell] : cells) {
        stats.bins.push_back({label, cell.first, cell.second / static_cast<double>(cell.first)});
    }
    stats.global_mean = mean_of(y);
    stats.sigma = population_sigma(y, stats.global_mean);
    stats.proportion_ones = static_cast<double>(ones) / static_cast<double>(stats.n);
    return stats;
}

double qim(std::span<const double> x, std::span<const double> y, std::size_t q) {
    require_same_length(x.size(), y.size(), ErrorCode::dimension_mismatch);
    if (x.empty()) {
        throw Error(ErrorCode::invalid_argument, "qim of empty arrays");
    }
    require_finite(y, "y");
    const BinPartition part = quantize(x, q);

    std::vector<std::size_t> counts(q, 0);
    std::vector<double> sums(q, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        ++counts[part.labels[i]];
        sums[part.labels[i]] += y[i];
    }
    const double global = mean_of(y);
    const double sigma = population_sigma(y, global);
    if (sigma == 0.0) {
        return 0.0;
    }

    double numerator = 0.0;
    for (const std::size_t bin : part.occupied) {
        const auto count = static_cast<double>(counts[bin]);
        const double dev = sums[bin] / count - global;
        numerator += dev * dev * count * count;
    }
    return numerator / (static_cast<double>(part.occupied.size()) * sigma);
}

double iscore_general(std::span<const std::size_t> labels, std::span<const double> y) {
    const PartitionStats stats = partition_stats(labels, y);
    double score = 0.0;
    for (const BinStats& bin : stats.bins) {
        const auto count = static_cast<double>(bin.count);
        const double dev = bin.local_mean - stats.global_mean;
        score += count * count * dev * dev;
    }
    return score;
}

double iscore_binary(std::span<const std::size_t> labels, std::span<const double> y) {
    for (const double v : y) {
        if (v != 0.0 && v != 1.0) {
            throw Error(ErrorCode::invalid_argument, "binary I-score requires y in {0, 1}");
        }
    }
    const PartitionStats stats = partition_stats(labels, y);
    double score = 0.0;
    for (const BinStats& bin : stats.bins) {
        const auto count = static_cast<double>(bin.count);
        const double ones = bin.local_mean * count;
        const double dev = std::round(ones) - count * stats.proportion_ones;
        score += dev * dev;
    }
    return score;
}

double normalized_iscore(std::span<const std::size_t> labels, std::span<const double> y) {
    const PartitionStats stats = partition_stats(labels, y);
    if (stats.n == 0 || stats.sigma == 0.0) {
        throw Error(ErrorCode::invalid_argument, "normalized I-score undefined for zero variance");
    }
    return iscore_general(labels, y) / (static_cast<double>(stats.n) * stats.sigma * stats.sigma);
}

std::vector<double> repeat_each(std::span<const double> values, std::size_t m) {
    std::vector<double> out;
    out.reserve(values.size() * m);
    for (const double v : values) {
        out.insert(out.end(), m, v);
    }
    return out;
}

}  // namespace qimrag
