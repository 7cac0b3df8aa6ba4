#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <thread>
#include <vector>

#include "qimrag/error.hpp"
#include "qimrag/rng.hpp"
#include "qimrag/vector_store.hpp"

using namespace qimrag;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "qimrag_test_store" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

ChunkRecord make_record(const std::string& id, std::vector<double> embedding, std::string doc = "1") {
    return {id, std::move(doc), 0, "text of " + id, std::move(embedding)};
}

const char* const table1_names[] = {"About YSA", "Board of Directors", "Definition of Homeless",
                                    "Our Team",  "Programs",           "Application Process",
                                    "Overview"};

std::vector<ChunkRecord> seven_documents(std::size_t dim) {
    std::vector<ChunkRecord> out;
    SplitMix64 rng(17);
    for (int i = 0; i < 7; ++i) {
        std::vector<double> e(dim);
        for (auto& v : e) {
            v = rng.next_signed_unit();
        }
        const std::string doc = std::to_string(i + 1);
        out.push_back({doc + "#0", doc, 0, table1_names[i], e});
    }
    return out;
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

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
}

}  // namespace

TEST_CASE("create_collection examples") {
    CollectionStore store(fresh_dir("create"));
    const auto ysa = store.create_collection("ysa", 64);
    CHECK(ysa->size() == 0);
    CHECK(ysa->dimension() == 64);
    CHECK(std::filesystem::exists(store.path_for("ysa")));
    CHECK(code_of([&] { store.create_collection("ysa", 64); }) == ErrorCode::duplicate_name);
    CHECK(code_of([&] { store.create_collection("ysa2", 0); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { store.create_collection("", 4); }) == ErrorCode::invalid_argument);

    // A second store over the same directory sees the persisted collection.
    CollectionStore again(store.path_for("ysa").parent_path());
    CHECK(code_of([&] { again.create_collection("ysa", 8); }) == ErrorCode::duplicate_name);
    CHECK(again.open_collection("ysa")->dimension() == 64);
    CHECK(code_of([&] { again.open_collection("missing"); }) == ErrorCode::not_found);
}

TEST_CASE("upsert examples") {
    Collection c("ysa", 8);
    auto docs = seven_documents(8);
    CHECK(c.upsert(docs) == 7);
    CHECK(c.size() == 7);

    ChunkRecord changed = docs[3];
    changed.text = "replacement text";
    CHECK(c.upsert(std::vector{changed}) == 1);
    CHECK(c.size() == 7);
    CHECK(c.get(changed.chunk_id)->text == "replacement text");

    std::vector<ChunkRecord> mixed{make_record("new-a", std::vector<double>(8, 1.0)),
                                   make_record("new-b", std::vector<double>(5, 1.0))};
    CHECK(code_of([&] { c.upsert(mixed); }) == ErrorCode::dimension_mismatch);
    CHECK(c.size() == 7);
    CHECK_FALSE(c.get("new-a").has_value());

    CHECK(code_of([&] { c.upsert(std::vector{make_record("z", std::vector<double>(8, 0.0))}); }) ==
          ErrorCode::degenerate_embedding);
}

TEST_CASE("erase_document removes only that document") {
    Collection c("ysa", 2);
    c.upsert(std::vector{make_record("a#0", {1, 0}, "a"), make_record("a#1", {0, 1}, "a"),
                         make_record("b#0", {1, 1}, "b")});
    CHECK(c.erase_document("a") == 2);
    CHECK(c.size() == 1);
    CHECK(c.get("b#0").has_value());
}

TEST_CASE("query_topk examples") {
    Collection c("unit", 2);
    const double r = 1.0 / std::sqrt(2.0);
    c.upsert(std::vector{make_record("e1", {1.0, 0.0}), make_record("e2", {0.0, 1.0}),
                         make_record("mixed", {r, r})});

    const auto top = c.query_topk(std::vector{1.0, 0.0}, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].chunk.chunk_id == "e1");
    CHECK(top[0].cosine == 1.0);
    CHECK(top[0].distance == 0.0);
    CHECK(top[1].chunk.chunk_id == "mixed");
    CHECK(top[1].cosine == doctest::Approx(0.70710678118654752).epsilon(1e-15));
    CHECK(top[1].distance == doctest::Approx(1.0 - 0.70710678118654752).epsilon(1e-12));

    CHECK(c.query_topk(std::vector{1.0, 0.0}, 10).size() == 3);

    CHECK(code_of([&] { c.query_topk(std::vector{1.0}, 1); }) == ErrorCode::dimension_mismatch);
    CHECK(code_of([&] { c.query_topk(std::vector{1.0, 0.0}, 0); }) == ErrorCode::invalid_argument);
    Collection empty("empty", 2);
    CHECK(code_of([&] { empty.query_topk(std::vector{1.0, 0.0}, 1); }) == ErrorCode::empty_collection);
}

TEST_CASE("query_topk ordering and top-1 oracle") {
    SplitMix64 rng(55);
    Collection c("rand", 6);
    std::vector<ChunkRecord> recs;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> e(6);
        for (auto& v : e) {
            v = rng.next_signed_unit();
        }
        recs.push_back(make_record("c" + std::to_string(i), e));
    }
    // Duplicate directions force cosine ties.
    recs.push_back(make_record("dup-b", recs[0].embedding));
    recs.push_back(make_record("dup-a", recs[0].embedding));
    c.upsert(recs);

    for (int q = 0; q < 50; ++q) {
        std::vector<double> query(6);
        for (auto& v : query) {
            v = rng.next_signed_unit();
        }
        if (q == 0) {
            query = recs[0].embedding;
        }
        const auto results = c.query_topk(query, 25);
        REQUIRE(results.size() == 25);
        for (std::size_t i = 1; i < results.size(); ++i) {
            const bool ordered = results[i - 1].cosine > results[i].cosine ||
                                 (results[i - 1].cosine == results[i].cosine &&
                                  results[i - 1].chunk.chunk_id < results[i].chunk.chunk_id);
            CHECK(ordered);
        }
        double best = -2.0;
        for (const auto& rec : recs) {
            best = std::max(best, cosine_similarity(query, rec.embedding));
        }
        CHECK(results[0].cosine == best);
        for (const auto& res : results) {
            CHECK(res.distance == 1.0 - res.cosine);
        }
    }
    const auto ties = c.query_topk(recs[0].embedding, 3);
    CHECK(ties[0].chunk.chunk_id == "c0");
    CHECK(ties[1].chunk.chunk_id == "dup-a");
    CHECK(ties[2].chunk.chunk_id == "dup-b");
}

TEST_CASE("filter_by_distance examples") {
    std::vector<RankedResult> results;
    for (const double d : {0.05, 0.2, 0.21}) {
        results.push_back({make_record("d" + std::to_string(d), {1.0}), 1.0 - d, d, std::nullopt});
    }
    const auto kept = filter_by_distance(results, 0.2);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].distance == 0.05);
    CHECK(kept[1].distance == 0.2);

    results.push_back({make_record("exact", {1.0}), 1.0, 0.0, std::nullopt});
    const auto exact = filter_by_distance(results, 0.0);
    REQUIRE(exact.size() == 1);
    CHECK(exact[0].chunk.chunk_id == "exact");

    CHECK(filter_by_distance({}, 0.2).empty());
    CHECK(code_of([&] { filter_by_distance(results, -0.1); }) == ErrorCode::invalid_argument);
}

TEST_CASE("persist and load round-trip") {
    const auto dir = fresh_dir("persist");
    Collection c("ysa", 16);
    auto docs = seven_documents(16);
    docs[2].text = "multi\nline \xE2\x9C\x93 text";
    docs[4].embedding[3] = -0.0;
    docs[5].embedding[0] = 5e-324;
    docs[6].ordinal = 123456789012345ULL;
    c.upsert(docs);
    const auto path = dir / "ysa.qvs";
    persist(c, path);
    const auto loaded = load_collection(path);
    CHECK(loaded->name() == "ysa");
    CHECK(loaded->dimension() == 16);
    const auto a = c.records();
    const auto b = loaded->records();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        for (std::size_t j = 0; j < a[i].embedding.size(); ++j) {
            CHECK(std::bit_cast<std::uint64_t>(a[i].embedding[j]) ==
                  std::bit_cast<std::uint64_t>(b[i].embedding[j]));
        }
    }
}

TEST_CASE("corrupt and future-version files are rejected") {
    const auto dir = fresh_dir("corrupt");
    Collection c("ysa", 4);
    c.upsert(seven_documents(4));
    const auto path = dir / "ysa.qvs";
    persist(c, path);
    const std::string good = slurp(path);

    spit(dir / "truncated.qvs", good.substr(0, good.size() / 2));
    CHECK(code_of([&] { load_collection(dir / "truncated.qvs"); }) == ErrorCode::corrupt_file);
    spit(dir / "tiny.qvs", good.substr(0, 6));
    CHECK(code_of([&] { load_collection(dir / "tiny.qvs"); }) == ErrorCode::corrupt_file);

    std::string flipped = good;
    flipped[flipped.size() / 2] ^= 0x40;
    spit(dir / "flipped.qvs", flipped);
    CHECK(code_of([&] { load_collection(dir / "flipped.qvs"); }) == ErrorCode::corrupt_file);

    std::string future = good;
    future[4] = 2;  // version field, little-endian
    spit(dir / "future.qvs", future);
    CHECK(code_of([&] { load_collection(dir / "future.qvs"); }) == ErrorCode::version_mismatch);

    spit(dir / "garbage.qvs", "not a collection at all");
    CHECK(code_of([&] { load_collection(dir / "garbage.qvs"); }) == ErrorCode::corrupt_file);
    CHECK(code_of([&] { load_collection(dir / "absent.qvs"); }) == ErrorCode::io_failure);
}

TEST_CASE("readers never observe a partial upsert") {
    Collection c("concurrent", 3);
    std::atomic<bool> done{false};
    std::atomic<int> violations{0};
    std::thread reader([&] {
        while (!done) {
            const auto n = c.size();
            if (n % 10 != 0) {
                ++violations;
            }
        }
    });
    for (int batch = 0; batch < 200; ++batch) {
        std::vector<ChunkRecord> recs;
        for (int i = 0; i < 10; ++i) {
            recs.push_back(make_record("b" + std::to_string(batch) + "-" + std::to_string(i), {1.0, 2.0, 3.0}));
        }
        c.upsert(recs);
    }
    done = true;
    reader.join();
    CHECK(violations == 0);
    CHECK(c.size() == 2000);
}
