#include "qimrag/vector_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "qimrag/error.hpp"
#include "qimrag/rng.hpp"

namespace qimrag {

namespace {

void validate_embedding(const ChunkRecord& record, std::size_t dimension) {
    if (record.embedding.size() != dimension) {
        throw Error(ErrorCode::dimension_mismatch,
                    "chunk '" + record.chunk_id + "' has dimension " +
                        std::to_string(record.embedding.size()) + ", collection expects " +
                        std::to_string(dimension));
    }
    bool nonzero = false;
    for (const double v : record.embedding) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::invalid_argument, "chunk '" + record.chunk_id + "' has a non-finite entry");
        }
        nonzero = nonzero || v != 0.0;
    }
    if (!nonzero) {
        throw Error(ErrorCode::degenerate_embedding, "chunk '" + record.chunk_id + "' has a zero embedding");
    }
}

bool ranked_before(const RankedResult& a, const RankedResult& b) {
    if (a.cosine != b.cosine) {
        return a.cosine > b.cosine;
    }
    return a.chunk.chunk_id < b.chunk.chunk_id;
}

}  // namespace

Collection::Collection(std::string name, std::size_t dimension)
    : name_(std::move(name)), dimension_(dimension) {
    if (name_.empty()) {
        throw Error(ErrorCode::invalid_argument, "collection name must be nonempty");
    }
    if (dimension_ == 0) {
        throw Error(ErrorCode::invalid_argument, "collection dimension must be at least 1");
    }
}

Collection::Collection(const Collection& other) : name_(other.name_), dimension_(other.dimension_) {
    std::shared_lock lock(other.mutex_);
    records_ = other.records_;
}

std::size_t Collection::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

std::size_t Collection::upsert(std::span<const ChunkRecord> records) {
    std::unordered_set<std::string_view> batch_ids;
    for (const ChunkRecord& r : records) {
        if (r.chunk_id.empty()) {
            throw Error(ErrorCode::invalid_argument, "chunk_id must be nonempty");
        }
        validate_embedding(r, dimension_);
        batch_ids.insert(r.chunk_id);
    }
    std::unique_lock lock(mutex_);
    for (const ChunkRecord& r : records) {
        records_.insert_or_assign(r.chunk_id, r);
    }
    return batch_ids.size();
}

std::size_t Collection::erase_document(const std::string& doc_id) {
    std::unique_lock lock(mutex_);
    return std::erase_if(records_, [&](const auto& entry) { return entry.second.doc_id == doc_id; });
}

std::optional<ChunkRecord> Collection::get(const std::string& chunk_id) const {
    std::shared_lock lock(mutex_);
    const auto it = records_.find(chunk_id);
    if (it == records_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<ChunkRecord> Collection::records() const {
    std::shared_lock lock(mutex_);
    std::vector<ChunkRecord> out;
    out.reserve(records_.size());
    for (const auto& [id, record] : records_) {
        out.push_back(record);
    }
    return out;
}

std::vector<RankedResult> Collection::query_topk(std::span<const double> query, std::size_t k) const {
    if (k == 0) {
        throw Error(ErrorCode::invalid_argument, "k must be at least 1");
    }
    if (query.size() != dimension_) {
        throw Error(ErrorCode::dimension_mismatch, "query has dimension " + std::to_string(query.size()) +
                                                       ", collection expects " + std::to_string(dimension_));
    }
    std::shared_lock lock(mutex_);
    if (records_.empty()) {
        throw Error(ErrorCode::empty_collection, "collection '" + name_ + "' is empty");
    }
    std::vector<RankedResult> scored;
    scored.reserve(records_.size());
    for (const auto& [id, record] : records_) {
        const double cosine = cosine_similarity(query, record.embedding);
        scored.push_back({record, cosine, 1.0 - cosine, std::nullopt});
    }
    lock.unlock();

    const std::size_t keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      ranked_before);
    scored.resize(keep);
    return scored;
}

std::vector<RankedResult> filter_by_distance(std::span<const RankedResult> results, double threshold) {
    if (!(threshold >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "distance threshold must be nonnegative");
    }
    std::vector<RankedResult> kept;
    for (const RankedResult& r : results) {
        if (r.distance <= threshold) {
            kept.push_back(r);
        }
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char magic[4] = {'Q', 'V', 'S', 'C'};

class Writer {
public:
    void u32(std::uint32_t v) { little_endian(v, 4); }
    void u64(std::uint64_t v) { little_endian(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::string_view s) { buf_.append(s); }
    void str(const std::string& s) {
        if (s.size() > UINT32_MAX) {
            throw Error(ErrorCode::invalid_argument, "string too long to serialize");
        }
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }
    std::string& buffer() { return buf_; }

private:
    void little_endian(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(little_endian(4)); }
    std::uint64_t u64() { return little_endian(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string_view bytes(std::size_t n) {
        need(n);
        const auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::string str() { return std::string(bytes(u32())); }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw Error(ErrorCode::corrupt_file, "unexpected end of collection file");
        }
    }
    std::uint64_t little_endian(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace

void persist(const Collection& collection, const std::filesystem::path& path) {
    const auto records = collection.records();
    Writer w;
    w.bytes(std::string_view(magic, 4));
    w.u32(collection_format_version);
    w.u64(collection.dimension());
    w.str(collection.name());
    w.u64(records.size());
    for (const ChunkRecord& r : records) {
        Writer body;
        body.str(r.chunk_id);
        body.str(r.doc_id);
        body.u64(r.ordinal);
        body.str(r.text);
        for (const double v : r.embedding) {
            body.f64(v);
        }
        w.u32(static_cast<std::uint32_t>(body.buffer().size()));
        w.bytes(body.buffer());
    }
    w.u64(fnv1a64(w.buffer()));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::io_failure, "cannot write " + tmp.string());
        }
        out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
        out.flush();
        if (!out) {
            throw Error(ErrorCode::io_failure, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::io_failure, "cannot replace " + path.string() + ": " + ec.message());
    }
}

std::unique_ptr<Collection> load_collection(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

    Reader header(data);
    if (header.bytes(4) != std::string_view(magic, 4)) {
        throw Error(ErrorCode::corrupt_file, path.string() + " is not a collection file");
    }
    const std::uint32_t version = header.u32();
    if (version != collection_format_version) {
        throw Error(ErrorCode::version_mismatch, "collection format version " + std::to_string(version) +
                                                     " is not supported (expected " +
                                                     std::to_string(collection_format_version) + ")");
    }
    if (data.size() < 8 + header.position()) {
        throw Error(ErrorCode::corrupt_file, "collection file truncated");
    }
    const std::string_view payload(data.data(), data.size() - 8);
    Reader trailer(std::string_view(data).substr(data.size() - 8));
    if (trailer.u64() != fnv1a64(payload)) {
        throw Error(ErrorCode::corrupt_file, "checksum mismatch in " + path.string());
    }

    Reader r(payload);
    r.bytes(8);  // magic + version, already checked
    const std::uint64_t dimension = r.u64();
    std::string name = r.str();
    const std::uint64_t count = r.u64();
    auto collection = std::make_unique<Collection>(std::move(name), dimension);

    std::vector<ChunkRecord> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t length = r.u32();
        Reader body(r.bytes(length));
        ChunkRecord rec;
        rec.chunk_id = body.str();
        rec.doc_id = body.str();
        rec.ordinal = body.u64();
        rec.text = body.str();
        rec.embedding.resize(dimension);
        for (auto& v : rec.embedding) {
            v = body.f64();
        }
        if (body.position() != length) {
            throw Error(ErrorCode::corrupt_file, "record length mismatch");
        }
        records.push_back(std::move(rec));
    }
    if (r.position() != payload.size()) {
        throw Error(ErrorCode::corrupt_file, "trailing bytes after records");
    }
    collection->upsert(records);
    return collection;
}

// ---------------------------------------------------------------------------

namespace {

void validate_name(const std::string& name) {
    if (name.empty()) {
        throw Error(ErrorCode::invalid_argument, "collection name must be nonempty");
    }
    for (const char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-' || c == '.';
        if (!ok || name.front() == '.') {
            throw Error(ErrorCode::invalid_argument, "collection name '" + name + "' has invalid characters");
        }
    }
}

}  // namespace

CollectionStore::CollectionStore(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::error_code ec;
    std::filesystem::create_directories(directory_, ec);
    if (ec) {
        throw Error(ErrorCode::io_failure, "cannot create " + directory_.string() + ": " + ec.message());
    }
}

std::filesystem::path CollectionStore::path_for(const std::string& name) const {
    return directory_ / (name + ".qvs");
}

bool CollectionStore::contains(const std::string& name) const {
    return std::filesystem::exists(path_for(name));
}

std::shared_ptr<Collection> CollectionStore::create_collection(const std::string& name, std::size_t dimension) {
    validate_name(name);
    std::lock_guard lock(mutex_);
    if (open_.contains(name) || contains(name)) {
        throw Error(ErrorCode::duplicate_name, "collection '" + name + "' already exists");
    }
    auto collection = std::make_shared<Collection>(name, dimension);
    persist(*collection, path_for(name));
    open_.emplace(name, collection);
    return collection;
}

std::shared_ptr<Collection> CollectionStore::open_collection(const std::string& name) {
    validate_name(name);
    std::lock_guard lock(mutex_);
    if (const auto it = open_.find(name); it != open_.end()) {
        return it->second;
    }
    if (!contains(name)) {
        throw Error(ErrorCode::not_found, "collection '" + name + "' does not exist");
    }
    std::shared_ptr<Collection> collection = load_collection(path_for(name));
    open_.emplace(name, collection);
    return collection;
}

void CollectionStore::save(const Collection& collection) const {
    persist(collection, path_for(collection.name()));
}

}  // namespace qimrag
