#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "qimrag/error.hpp"
#include "qimrag/rng.hpp"
#include "qimrag/similarity.hpp"

using namespace qimrag;

namespace {

std::vector<double> uniform_vector(SplitMix64& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& e : v) {
        e = lo + (hi - lo) * rng.next_unit();
    }
    return v;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected qimrag::Error");
    return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("cosine similarity examples") {
    CHECK(cosine_similarity(std::vector{1.0, 2.0, 3.0}, std::vector{1.0, 2.0, 3.0}) == 1.0);
    CHECK(cosine_similarity(std::vector{1.0, 0.0}, std::vector{-1.0, 0.0}) == -1.0);
    CHECK(cosine_similarity(std::vector{1.0, 0.0}, std::vector{1.0, 1.0}) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("cosine similarity errors") {
    CHECK(code_of([] { cosine_similarity(std::vector{1.0}, std::vector{1.0, 2.0}); }) ==
          ErrorCode::dimension_mismatch);
    CHECK(code_of([] { cosine_similarity(std::vector{0.0, 0.0}, std::vector{1.0, 2.0}); }) ==
          ErrorCode::degenerate_embedding);
    CHECK(code_of([] { cosine_similarity(std::vector{NAN, 1.0}, std::vector{1.0, 2.0}); }) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("cosine bounds, self-similarity and scale invariance") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.next_below(48);
        const auto a = uniform_vector(rng, n, -3.0, 3.0);
        const auto b = uniform_vector(rng, n, -3.0, 3.0);
        const double c = cosine_similarity(a, b);
        CHECK(c >= -1.0 - 1e-12);
        CHECK(c <= 1.0 + 1e-12);
        CHECK(cosine_similarity(a, a) == 1.0);
        CHECK(cosine_similarity(b, a) == c);

        const double scale = 0.01 + 100.0 * rng.next_unit();
        std::vector<double> scaled(a);
        for (auto& e : scaled) {
            e *= scale;
        }
        CHECK(cosine_similarity(scaled, b) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("quantize examples") {
    const auto p = quantize(std::vector{1.0, 1.0, 2.0, 2.0}, 2);
    CHECK(p.labels == std::vector<std::size_t>{0, 0, 1, 1});
    CHECK(p.edges == std::vector{1.0, 1.5, 2.0});
    CHECK(p.occupied == std::vector<std::size_t>{0, 1});

    const auto constant = quantize(std::vector{5.0, 5.0, 5.0}, 4);
    CHECK(constant.labels == std::vector<std::size_t>{0, 0, 0});
    CHECK(constant.occupied == std::vector<std::size_t>{0});

    // width 0.2475: 0.24 < 0.2475, 0.4950 <= 0.5 < 0.7425, 0.99 clamps from 4 to 3.
    const auto p4 = quantize(std::vector{0.0, 0.24, 0.5, 0.99}, 4);
    CHECK(p4.labels == std::vector<std::size_t>{0, 0, 2, 3});
    CHECK(p4.occupied == std::vector<std::size_t>{0, 2, 3});
    CHECK(p4.edges.size() == 5);

    CHECK(code_of([] { quantize(std::vector{1.0}, 0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("quantize invariants") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.next_below(64);
        const std::size_t q = 1 + rng.next_below(32);
        const auto x = uniform_vector(rng, n, -10.0, 10.0);
        const auto p = quantize(x, q);
        REQUIRE(p.labels.size() == n);
        CHECK(p.edges.size() == q + 1);
        CHECK(std::is_sorted(p.edges.begin(), p.edges.end()));
        std::vector<std::size_t> present(p.labels);
        std::sort(present.begin(), present.end());
        present.erase(std::unique(present.begin(), present.end()), present.end());
        CHECK(present == p.occupied);
        CHECK(p.occupied.size() <= q);
        for (const auto label : p.labels) {
            CHECK(label < q);
        }
    }
}

TEST_CASE("bit-width reading of q") {
    CHECK(bin_count_from_bits(4) == 16);
    CHECK(bin_count_from_bits(1) == 2);
    CHECK(code_of([] { bin_count_from_bits(9); }) == ErrorCode::invalid_argument);
}

TEST_CASE("qim examples") {
    const std::vector x{1.0, 1.0, 2.0, 2.0};
    const std::vector y{0.0, 0.0, 1.0, 1.0};
    CHECK(oracle::brute_force_qim(x, y, 2) == doctest::Approx(2.0));
    CHECK(qim(x, y, 2) == doctest::Approx(2.0).epsilon(1e-15));

    CHECK(qim(std::vector{0.3, -2.0, 9.0}, std::vector{4.0, 4.0, 4.0}, 8) == 0.0);

    const auto x3 = repeat_each(x, 3);
    const auto y3 = repeat_each(y, 3);
    CHECK(x3.size() == 12);
    CHECK(oracle::brute_force_qim(x3, y3, 2) == doctest::Approx(18.0));
    CHECK(qim(x3, y3, 2) == doctest::Approx(18.0).epsilon(1e-14));

    CHECK(code_of([] { qim(std::vector{1.0, 2.0}, std::vector{1.0}, 2); }) ==
          ErrorCode::dimension_mismatch);
}

TEST_CASE("qim agrees with the bin-materializing oracle") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.next_below(64);
        const std::size_t q = std::size_t{2} << rng.next_below(3);
        const auto x = uniform_vector(rng, n, -1.0, 1.0);
        const auto y = uniform_vector(rng, n, -5.0, 5.0);
        const double expected = oracle::brute_force_qim(x, y, q);
        const double actual = qim(x, y, q);
        CHECK(actual >= 0.0);
        CHECK(oracle::rel_close(actual, expected, 1e-9, 1e-12));
    }
}

TEST_CASE("qim is invariant under a joint permutation") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_below(40);
        const auto x = uniform_vector(rng, n, 0.0, 1.0);
        const auto y = uniform_vector(rng, n, 0.0, 1.0);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(order[i], order[rng.next_below(i + 1)]);
        }
        std::vector<double> xp(n), yp(n);
        for (std::size_t i = 0; i < n; ++i) {
            xp[i] = x[order[i]];
            yp[i] = y[order[i]];
        }
        CHECK(oracle::rel_close(qim(xp, yp, 8), qim(x, y, 8), 1e-9, 1e-12));
    }
}

TEST_CASE("replication multiplies qim by m squared") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.next_below(30);
        const auto x = uniform_vector(rng, n, 0.0, 1.0);
        const auto y = uniform_vector(rng, n, 0.0, 1.0);
        const double base = qim(x, y, 4);
        for (const std::size_t m : {2u, 3u, 5u}) {
            const double rep = qim(repeat_each(x, m), repeat_each(y, m), 4);
            CHECK(oracle::rel_close(rep, static_cast<double>(m * m) * base, 1e-9, 1e-12));
            CHECK(cosine_similarity(repeat_each(x, m), repeat_each(y, m)) == cosine_similarity(x, y));
        }
    }
}

TEST_CASE("iscore_general examples") {
    CHECK(iscore_general(std::vector<std::size_t>{0, 0, 1, 1}, std::vector{0.0, 0.0, 1.0, 1.0}) ==
          doctest::Approx(2.0));
    CHECK(iscore_general(std::vector<std::size_t>{3, 3, 3}, std::vector{1.0, 7.0, -2.0}) ==
          doctest::Approx(0.0));
    CHECK(iscore_general(std::vector<std::size_t>{0, 1, 2}, std::vector{1.0, 2.0, 3.0}) ==
          doctest::Approx(2.0));
    CHECK(code_of([] { iscore_general(std::vector<std::size_t>{0}, std::vector{1.0, 2.0}); }) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("iscore_binary examples") {
    CHECK(iscore_binary(std::vector<std::size_t>{0, 0, 1, 1}, std::vector{0.0, 0.0, 1.0, 1.0}) ==
          doctest::Approx(2.0));
    CHECK(iscore_binary(std::vector<std::size_t>{0, 1, 1}, std::vector{0.0, 0.0, 0.0}) == 0.0);
    CHECK(iscore_binary(std::vector<std::size_t>{0, 1}, std::vector{1.0, 0.0}) ==
          doctest::Approx(0.5));
    CHECK(code_of([] {
              iscore_binary(std::vector<std::size_t>{0, 1}, std::vector{0.5, 1.0});
          }) == ErrorCode::invalid_argument);
}

TEST_CASE("normalized_iscore examples") {
    CHECK(normalized_iscore(std::vector<std::size_t>{0, 0, 1, 1}, std::vector{0.0, 0.0, 1.0, 1.0}) ==
          doctest::Approx(2.0));
    CHECK(normalized_iscore(std::vector<std::size_t>{1, 1, 1}, std::vector{1.0, 2.0, 3.0}) ==
          doctest::Approx(0.0));
    CHECK(normalized_iscore(std::vector<std::size_t>{0, 1, 2}, std::vector{1.0, 2.0, 3.0}) ==
          doctest::Approx(1.0));
    CHECK(code_of([] {
              normalized_iscore(std::vector<std::size_t>{0, 1}, std::vector{2.0, 2.0});
          }) == ErrorCode::invalid_argument);
}

TEST_CASE("qim decomposes into the general I-score") {
    SplitMix64 rng(314);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next_below(60);
        const std::size_t q = 2 + rng.next_below(15);
        const auto x = uniform_vector(rng, n, -1.0, 1.0);
        std::vector<double> y(n);
        for (auto& v : y) {
            v = static_cast<double>(rng.next_below(2));
        }
        const auto part = quantize(x, q);
        const auto stats = partition_stats(part.labels, y);
        if (stats.sigma > 0.0) {
            const double general = iscore_general(part.labels, y);
            CHECK(oracle::rel_close(qim(x, y, q),
                                    general / (static_cast<double>(part.occupied.size()) * stats.sigma),
                                    1e-9, 1e-12));
            CHECK(oracle::rel_close(iscore_binary(part.labels, y), general, 1e-9, 1e-12));
        }
    }
}

TEST_CASE("partition stats invariants") {
    SplitMix64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.next_below(50);
        const auto x = uniform_vector(rng, n, 0.0, 1.0);
        const auto y = uniform_vector(rng, n, -1.0, 1.0);
        const auto part = quantize(x, 6);
        const auto stats = partition_stats(part.labels, y);
        std::size_t total = 0;
        double weighted = 0.0;
        for (const auto& bin : stats.bins) {
            total += bin.count;
            weighted += bin.local_mean * static_cast<double>(bin.count);
        }
        CHECK(total == n);
        CHECK(weighted / static_cast<double>(n) ==
              doctest::Approx(stats.global_mean).epsilon(1e-9).scale(1.0));
    }
}
