#include "qimrag/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string>

#include "qimrag/error.hpp"
#include "qimrag/rng.hpp"
#include "qimrag/similarity.hpp"
#include "text_util.hpp"

namespace qimrag::simlab {

void SweepConfig::validate() const {
    if (n < 2) {
        throw Error(ErrorCode::invalid_argument, "sweep vector size must be at least 2");
    }
    if (k_values.empty()) {
        throw Error(ErrorCode::invalid_argument, "sweep needs at least one k value");
    }
    if (!std::is_sorted(k_values.begin(), k_values.end())) {
        throw Error(ErrorCode::invalid_argument, "k values must be ascending");
    }
    if (!(k_values.front() >= 0.0) || !std::isfinite(k_values.back())) {
        throw Error(ErrorCode::invalid_argument, "k values must be finite and nonnegative");
    }
    if (q < 1) {
        throw Error(ErrorCode::invalid_argument, "bin count must be positive");
    }
    if (trials_per_k < 1) {
        throw Error(ErrorCode::invalid_argument, "trials per k must be positive");
    }
}

std::vector<double> k_grid(double k_max, double k_step) {
    if (!(k_max >= 0.0) || !(k_step > 0.0) || !std::isfinite(k_max)) {
        throw Error(ErrorCode::invalid_argument, "k grid needs k_max >= 0 and k_step > 0");
    }
    const auto steps = static_cast<std::size_t>(std::floor(k_max / k_step + 0.5));
    std::vector<double> grid(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        grid[i] = static_cast<double>(i) * k_step;
    }
    return grid;
}

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<SweepRecord> records;
    records.reserve(cfg.k_values.size() * cfg.trials_per_k);

    std::vector<double> a(cfg.n), b(cfg.n);
    for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
        const double k = cfg.k_values[ki];
        for (std::size_t trial = 0; trial < cfg.trials_per_k; ++trial) {
            SplitMix64 rng(derive_seed(derive_seed(cfg.seed, ki), trial));
            for (auto& v : a) {
                v = rng.next_unit();
            }
            for (std::size_t i = 0; i < cfg.n; ++i) {
                b[i] = a[i] + k * rng.next_unit();
            }
            records.push_back({cfg.n, k, trial, cosine_similarity(a, b), qim(a, b, cfg.q)});
        }
    }
    return records;
}

void write_csv(std::span<const SweepRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
    }
    out << "n,k,trial,cosine,qim\n";
    for (const SweepRecord& r : records) {
        out << r.n << ',' << detail::format_real(r.k) << ',' << r.trial << ','
            << detail::format_real(r.cosine) << ',' << detail::format_real(r.qim) << '\n';
    }
    out.flush();
    if (!out) {
        throw Error(ErrorCode::io_failure, "write failed for " + path.string());
    }
}

std::vector<SweepRecord> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "n,k,trial,cosine,qim") {
        throw Error(ErrorCode::corrupt_file, "missing sweep CSV header in " + path.string());
    }
    std::vector<SweepRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = detail::split(line, ',');
        if (fields.size() != 5) {
            throw Error(ErrorCode::corrupt_file, "bad sweep row: " + line);
        }
        const auto n = detail::parse_int<std::size_t>(fields[0]);
        const auto k = detail::parse_real(fields[1]);
        const auto trial = detail::parse_int<std::size_t>(fields[2]);
        const auto cosine = detail::parse_real(fields[3]);
        const auto q = detail::parse_real(fields[4]);
        if (!n || !k || !trial || !cosine || !q) {
            throw Error(ErrorCode::corrupt_file, "bad sweep row: " + line);
        }
        records.push_back({*n, *k, *trial, *cosine, *q});
    }
    return records;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "spearman needs two equal-length samples of size >= 2");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double mean = (static_cast<double>(a.size()) + 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (va == 0.0 || vb == 0.0) {
        throw Error(ErrorCode::invalid_argument, "spearman undefined for a constant sample");
    }
    return cov / std::sqrt(va * vb);
}

std::vector<KSummary> summarize_by_k(std::span<const SweepRecord> records) {
    struct Acc {
        double cosine = 0.0;
        double qim = 0.0;
        double max_qim = 0.0;
        std::size_t count = 0;
    };
    std::map<double, Acc> by_k;
    for (const SweepRecord& r : records) {
        Acc& acc = by_k[r.k];
        acc.cosine += r.cosine;
        acc.qim += r.qim;
        acc.max_qim = acc.count == 0 ? r.qim : std::max(acc.max_qim, r.qim);
        ++acc.count;
    }
    std::vector<KSummary> out;
    for (const auto& [k, acc] : by_k) {
        const auto count = static_cast<double>(acc.count);
        out.push_back({k, acc.cosine / count, acc.qim / count, acc.max_qim});
    }
    return out;
}

}  // namespace qimrag::simlab
