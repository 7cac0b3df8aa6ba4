#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "qimrag/similarity.hpp"

namespace qimrag {

struct ChunkRecord {
    std::string chunk_id;
    std::string doc_id;
    std::uint64_t ordinal = 0;
    std::string text;
    EmbeddingVector embedding;

    bool operator==(const ChunkRecord&) const = default;
};

struct RankedResult {
    ChunkRecord chunk;
    double cosine = 0.0;
    double distance = 0.0;  // 1 - cosine
    std::optional<double> qim_score;
};

/// Default cosine-distance cutoff for showing a retrieval candidate.
inline constexpr double default_distance_threshold = 0.2;

/// In-memory collection of chunks sharing one embedding dimension.
///
/// Many readers or one writer at a time; an upsert batch becomes visible
/// atomically.
class Collection {
public:
    Collection(std::string name, std::size_t dimension);

    Collection(const Collection& other);
    Collection& operator=(const Collection&) = delete;

    const std::string& name() const noexcept { return name_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const;

    /// Inserts or replaces by chunk_id. All-or-nothing: a batch with any
    /// dimension mismatch or non-finite entry leaves the collection unchanged.
    std::size_t upsert(std::span<const ChunkRecord> records);

    /// Removes every chunk belonging to doc_id; returns how many were removed.
    std::size_t erase_document(const std::string& doc_id);

    std::optional<ChunkRecord> get(const std::string& chunk_id) const;

    /// Records ordered by chunk_id.
    std::vector<ChunkRecord> records() const;

    /// Exact scan. Results ordered by cosine descending, then chunk_id ascending.
    std::vector<RankedResult> query_topk(std::span<const double> query, std::size_t k) const;

private:
    std::string name_;
    std::size_t dimension_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, ChunkRecord> records_;
};

/// Keeps results whose distance is at most threshold (inclusive), in order.
std::vector<RankedResult> filter_by_distance(std::span<const RankedResult> results, double threshold);

/// On-disk format, little-endian throughout:
///   magic "QVSC" | u32 version | u64 dimension | u32 name length | name bytes |
///   u64 record count | records | u64 FNV-1a checksum of all preceding bytes
/// Each record is u32 byte length followed by chunk_id, doc_id (u32-prefixed
/// strings), u64 ordinal, text (u32-prefixed), dimension x IEEE-754 binary64.
inline constexpr std::uint32_t collection_format_version = 1;

void persist(const Collection& collection, const std::filesystem::path& path);
std::unique_ptr<Collection> load_collection(const std::filesystem::path& path);

/// A directory of named collections, one file per collection.
class CollectionStore {
public:
    explicit CollectionStore(std::filesystem::path directory);

    /// Creates and persists an empty collection. Fails if the name exists.
    std::shared_ptr<Collection> create_collection(const std::string& name, std::size_t dimension);
    std::shared_ptr<Collection> open_collection(const std::string& name);
    bool contains(const std::string& name) const;
    void save(const Collection& collection) const;
    std::filesystem::path path_for(const std::string& name) const;

private:
    std::filesystem::path directory_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Collection>> open_;
};

}  // namespace qimrag
