#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "qimrag/dataset.hpp"
#include "qimrag/feedback.hpp"
#include "qimrag/pipeline.hpp"
#include "qimrag/providers.hpp"
#include "qimrag/vector_store.hpp"

namespace httplib {
class Server;
}

namespace qimrag::service {

struct ServiceConfig {
    std::filesystem::path cache_dir;
    std::optional<std::filesystem::path> corpus_dir;  // *.txt ingested at startup, doc_id = file stem
    std::size_t chunk_chars = default_chunk_chars;
    std::size_t chunk_overlap = default_chunk_overlap;
    std::size_t pairs_per_chunk = 4;
    double split_ratio = default_split_ratio;
    std::uint64_t split_seed = 20240101;
    int default_min_rating = 4;
};

inline constexpr std::string_view collection_name = "corpus";
inline constexpr std::string_view manifest_file = "documents.json";
inline constexpr std::string_view feedback_file = "feedback.log";

/// Status code plus body, independent of the HTTP library.
struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct IngestResult {
    std::size_t chunks_created = 0;
    std::size_t chunks_skipped = 0;  // chunks whose embedding was degenerate
    std::size_t qa_pairs = 0;
    std::size_t qa_failures = 0;  // chunks whose Q&A generation failed or parsed to nothing
};

/// Ingest, query, feedback and export over one collection persisted in the
/// cache directory. Ingests are serialized; queries and exports share a lock.
class RagService {
public:
    RagService(ServiceConfig config, ProviderSet providers);

    /// Chunks, embeds and upserts a document, replacing an older version. A
    /// document whose content hash is unchanged creates nothing.
    IngestResult ingest_document(const std::string& doc_id, const std::string& text);
    /// Ingests every *.txt in the directory in file-name order.
    std::size_t ingest_directory(const std::filesystem::path& directory);

    PipelineAnswer ask(const std::string& question, const AnswerOptions& options) const;
    FeedbackRecord record_feedback(FeedbackRecord record);
    /// Generated pairs split by the configured seed, with feedback merged into train.
    DatasetBundle training_bundle(int min_rating) const;

    std::size_t collection_size() const;
    std::vector<FeedbackRecord> feedback_records() const;
    const ProviderSet& providers() const { return providers_; }
    const ServiceConfig& config() const { return config_; }

    // JSON endpoints ---------------------------------------------------------
    Reply handle_ingest(const std::string& body);
    Reply handle_query(const std::string& body) const;
    Reply handle_feedback(const std::string& body);
    /// split is "train", "test" or "all" (default).
    Reply handle_export(const std::optional<std::string>& min_rating, const std::optional<std::string>& split) const;
    Reply handle_health() const;

private:
    struct DocumentEntry {
        std::string content_hash;
        std::vector<std::string> chunk_ids;
        std::vector<QAPair> pairs;
    };

    void load_manifest();
    void save_manifest() const;
    void load_feedback();

    ServiceConfig config_;
    ProviderSet providers_;
    CollectionStore store_;
    std::shared_ptr<Collection> collection_;

    std::mutex ingest_mutex_;
    mutable std::shared_mutex state_mutex_;
    std::map<std::string, DocumentEntry> documents_;

    mutable std::mutex feedback_mutex_;
    std::vector<FeedbackRecord> feedback_;
    std::uint64_t next_feedback_seq_ = 1;
    std::int64_t last_timestamp_ = 0;
};

/// Routes: POST /ingest, POST /query, POST /feedback, GET /export/training,
/// GET /health. Responses carry permissive CORS headers for the browser client.
void register_routes(httplib::Server& server, RagService& service);

}  // namespace qimrag::service
