#include "qimrag/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "qimrag/embedding.hpp"
#include "qimrag/error.hpp"
#include "qimrag/rng.hpp"
#include "text_util.hpp"

namespace qimrag::service {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::degenerate_embedding:
            return 400;
        case ErrorCode::not_found:
        case ErrorCode::empty_collection:
            return 404;
        case ErrorCode::dimension_mismatch:
        case ErrorCode::duplicate_name:
            return 409;
        case ErrorCode::provider_failure:
            return 502;
        default:
            return 500;
    }
}

Reply json_reply(int status, const json& body) {
    return {status, body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json"};
}

Reply error_reply(const Error& e) {
    return json_reply(status_for(e.code()), {{"error", e.what()}, {"code", to_string(e.code())}});
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::io_failure, "cannot open " + tmp + " for writing");
        }
        out << content;
        if (!out.flush()) {
            throw Error(ErrorCode::io_failure, "write failed for " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::io_failure, "cannot replace " + path.string() + ": " + ec.message());
    }
}

void append_durably(const std::filesystem::path& path, const std::string& data) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string() + ": " + std::strerror(errno));
    }
    std::size_t written = 0;
    while (written < data.size()) {
        const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            const std::string reason = std::strerror(errno);
            ::close(fd);
            throw Error(ErrorCode::io_failure, "write to " + path.string() + " failed: " + reason);
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        const std::string reason = std::strerror(errno);
        ::close(fd);
        throw Error(ErrorCode::io_failure, "fsync of " + path.string() + " failed: " + reason);
    }
    ::close(fd);
}

json parse_object(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::invalid_argument, "body is not valid JSON");
    }
    if (!j.is_object()) {
        throw Error(ErrorCode::invalid_argument, "body must be a JSON object");
    }
    return j;
}

std::string required_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw Error(ErrorCode::invalid_argument, std::string("'") + key + "' must be a string");
    }
    return j[key].get<std::string>();
}

bool is_blank(const std::string& s) {
    return detail::trim(s).empty();
}

std::size_t positive_integer(const json& j, const char* key) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 1) {
        throw Error(ErrorCode::invalid_argument, std::string("'") + key + "' must be a positive integer");
    }
    return j.get<std::size_t>();
}

AnswerOptions parse_options(const json& body) {
    AnswerOptions options;
    if (!body.contains("options") || body["options"].is_null()) {
        return options;
    }
    const json& o = body["options"];
    if (!o.is_object()) {
        throw Error(ErrorCode::invalid_argument, "'options' must be an object");
    }
    if (o.contains("k")) {
        options.k = positive_integer(o["k"], "k");
    }
    if (o.contains("q")) {
        options.q = positive_integer(o["q"], "q");
    }
    if (o.contains("threshold")) {
        if (!o["threshold"].is_number()) {
            throw Error(ErrorCode::invalid_argument, "'threshold' must be a number");
        }
        options.threshold = o["threshold"].get<double>();
    }
    if (o.contains("min_qim") && !o["min_qim"].is_null()) {
        if (!o["min_qim"].is_number()) {
            throw Error(ErrorCode::invalid_argument, "'min_qim' must be a number");
        }
        options.min_qim = o["min_qim"].get<double>();
    }
    options.validate();
    return options;
}

json answer_json(const PipelineAnswer& a) {
    json refs = json::array();
    for (const RankedResult& r : a.references) {
        refs.push_back({{"chunk_id", r.chunk.chunk_id},
                        {"doc_id", r.chunk.doc_id},
                        {"ordinal", r.chunk.ordinal},
                        {"text", r.chunk.text},
                        {"cosine", r.cosine},
                        {"distance", r.distance},
                        {"qim_score", r.qim_score ? json(*r.qim_score) : json(nullptr)}});
    }
    json timings = json::object();
    for (const StageTiming& t : a.timings) {
        timings[t.stage] = t.milliseconds;
    }
    return {{"question", a.question},
            {"outcome", a.outcome == AnswerOutcome::answered ? "answered" : "no_relevant_content"},
            {"degraded", a.degraded},
            {"degradation_reason", a.degradation_reason},
            {"answer1", a.answer1},
            {"answer2", a.answer2},
            {"final_answer", a.final_answer},
            {"references", refs},
            {"timings_ms", timings}};
}

}  // namespace

// ---------------------------------------------------------------------------

RagService::RagService(ServiceConfig config, ProviderSet providers)
    : config_(std::move(config)), providers_(std::move(providers)), store_(config_.cache_dir) {
    if (!providers_.embedder || !providers_.fine_tuned || !providers_.foundational || !providers_.qa_generator) {
        throw Error(ErrorCode::invalid_argument, "every provider role must be set");
    }
    const std::string name(collection_name);
    collection_ = store_.contains(name) ? store_.open_collection(name)
                                        : store_.create_collection(name, providers_.embedder->dimension());
    load_manifest();
    load_feedback();
    if (config_.corpus_dir) {
        ingest_directory(*config_.corpus_dir);
    }
}

void RagService::load_manifest() {
    const auto path = config_.cache_dir / manifest_file;
    if (!std::filesystem::exists(path)) {
        return;
    }
    try {
        const json doc = json::parse(read_file(path));
        for (const auto& [doc_id, entry] : doc.at("documents").items()) {
            DocumentEntry e;
            e.content_hash = entry.at("content_hash").get<std::string>();
            e.chunk_ids = entry.at("chunk_ids").get<std::vector<std::string>>();
            for (const auto& p : entry.at("pairs")) {
                e.pairs.push_back(QAPair::make(p.at("question").get<std::string>(), p.at("answer").get<std::string>(),
                                               doc_id, PairOrigin::generated));
            }
            documents_.emplace(doc_id, std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::corrupt_file, path.string() + ": " + e.what());
    }
}

void RagService::save_manifest() const {
    json docs = json::object();
    for (const auto& [doc_id, entry] : documents_) {
        json pairs = json::array();
        for (const QAPair& p : entry.pairs) {
            pairs.push_back({{"question", p.question}, {"answer", p.answer}});
        }
        docs[doc_id] = {{"content_hash", entry.content_hash}, {"chunk_ids", entry.chunk_ids}, {"pairs", pairs}};
    }
    const json doc = {{"version", 1}, {"documents", docs}};
    write_atomically(config_.cache_dir / manifest_file,
                     doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

void RagService::load_feedback() {
    const auto path = config_.cache_dir / feedback_file;
    if (!std::filesystem::exists(path)) {
        return;
    }
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::uint64_t lines = 0;
    while (std::getline(in, line)) {
        if (is_blank(line)) {
            continue;
        }
        ++lines;
        try {
            FeedbackRecord r = feedback_from_json_line(line);
            last_timestamp_ = std::max(last_timestamp_, r.timestamp);
            feedback_.push_back(std::move(r));
        } catch (const Error&) {
            // A torn final line from an interrupted append is skipped.
        }
    }
    next_feedback_seq_ = lines + 1;
}

IngestResult RagService::ingest_document(const std::string& doc_id, const std::string& text) {
    if (is_blank(doc_id)) {
        throw Error(ErrorCode::invalid_argument, "doc_id must be nonempty");
    }
    if (is_blank(text)) {
        throw Error(ErrorCode::invalid_argument, "text must be nonempty");
    }
    const std::scoped_lock serial(ingest_mutex_);
    const std::string hash = hex64(fnv1a64(text));
    {
        const std::shared_lock read(state_mutex_);
        if (const auto it = documents_.find(doc_id); it != documents_.end() && it->second.content_hash == hash) {
            return {};
        }
    }
    if (providers_.embedder->dimension() != collection_->dimension()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "embedder dimension " + std::to_string(providers_.embedder->dimension()) +
                        " does not match collection dimension " + std::to_string(collection_->dimension()));
    }

    IngestResult result;
    DocumentEntry entry{hash, {}, {}};
    std::vector<ChunkRecord> records;
    for (const TextChunk& chunk : chunk_text(doc_id, text, config_.chunk_chars, config_.chunk_overlap)) {
        auto embedding = providers_.embedder->embed(chunk.text);
        if (embedding.size() != collection_->dimension()) {
            throw Error(ErrorCode::dimension_mismatch, "embedder returned dimension " +
                                                           std::to_string(embedding.size()));
        }
        if (is_degenerate(embedding)) {
            ++result.chunks_skipped;
            continue;
        }
        std::string chunk_id = doc_id + "#" + std::to_string(chunk.ordinal);
        entry.chunk_ids.push_back(chunk_id);
        records.push_back({std::move(chunk_id), doc_id, chunk.ordinal, chunk.text, std::move(embedding)});

        try {
            auto generated = generate_qa(chunk, *providers_.qa_generator, config_.pairs_per_chunk);
            if (generated.no_pairs()) {
                ++result.qa_failures;
            }
            for (QAPair& p : generated.pairs) {
                entry.pairs.push_back(std::move(p));
            }
        } catch (const std::exception&) {
            ++result.qa_failures;
        }
    }
    result.chunks_created = records.size();
    result.qa_pairs = entry.pairs.size();

    const std::unique_lock write(state_mutex_);
    collection_->erase_document(doc_id);
    collection_->upsert(records);
    documents_[doc_id] = std::move(entry);
    store_.save(*collection_);
    save_manifest();
    return result;
}

std::size_t RagService::ingest_directory(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
        throw Error(ErrorCode::io_failure, directory.string() + " is not a directory");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(directory)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::size_t created = 0;
    for (const auto& f : files) {
        created += ingest_document(f.stem().string(), read_file(f)).chunks_created;
    }
    return created;
}

PipelineAnswer RagService::ask(const std::string& question, const AnswerOptions& options) const {
    const std::shared_lock read(state_mutex_);
    if (collection_->size() == 0) {
        throw Error(ErrorCode::empty_collection, "no documents have been ingested");
    }
    return answer(question, *collection_, providers_, options);
}

FeedbackRecord RagService::record_feedback(FeedbackRecord record) {
    if (record.rating < lowest_rating || record.rating > highest_rating) {
        throw Error(ErrorCode::invalid_argument, "rating must be an integer from 1 to 5");
    }
    if (is_blank(record.question)) {
        throw Error(ErrorCode::invalid_argument, "question must be nonempty");
    }
    const std::scoped_lock lock(feedback_mutex_);
    const auto now =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
    record.timestamp = std::max<std::int64_t>(now, last_timestamp_);
    std::string seq = std::to_string(next_feedback_seq_);
    record.id = "fb-" + std::string(seq.size() < 6 ? 6 - seq.size() : 0, '0') + seq;

    const auto path = config_.cache_dir / feedback_file;
    std::string line = to_json_line(record) + "\n";
    if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
        std::ifstream in(path, std::ios::binary);
        in.seekg(-1, std::ios::end);
        if (in.get() != '\n') {
            line.insert(line.begin(), '\n');
        }
    }
    append_durably(path, line);

    last_timestamp_ = record.timestamp;
    ++next_feedback_seq_;
    feedback_.push_back(record);
    return record;
}

DatasetBundle RagService::training_bundle(int min_rating) const {
    std::vector<QAPair> pairs;
    {
        const std::shared_lock read(state_mutex_);
        for (const auto& [doc_id, entry] : documents_) {
            pairs.insert(pairs.end(), entry.pairs.begin(), entry.pairs.end());
        }
    }
    DatasetBundle bundle;
    std::set<std::pair<std::string, std::string>> distinct;
    for (const QAPair& p : pairs) {
        distinct.emplace(p.question, p.answer);
    }
    if (distinct.size() >= 2) {
        bundle = split_dataset(std::move(pairs), config_.split_ratio, config_.split_seed);
    } else {
        bundle.split_seed = config_.split_seed;
        bundle.split_ratio = config_.split_ratio;
        if (!pairs.empty()) {
            bundle.train.push_back(pairs.front());
        }
    }
    const auto records = feedback_records();
    return merge_feedback(std::move(bundle), records, min_rating);
}

std::size_t RagService::collection_size() const {
    return collection_->size();
}

std::vector<FeedbackRecord> RagService::feedback_records() const {
    const std::scoped_lock lock(feedback_mutex_);
    return feedback_;
}

// ---------------------------------------------------------------------------

Reply RagService::handle_ingest(const std::string& body) {
    try {
        const json j = parse_object(body);
        const auto result = ingest_document(required_string(j, "doc_id"), required_string(j, "text"));
        return json_reply(200, {{"chunks_created", result.chunks_created},
                                {"chunks_skipped", result.chunks_skipped},
                                {"qa_pairs", result.qa_pairs},
                                {"qa_failures", result.qa_failures},
                                {"collection_size", collection_size()}});
    } catch (const Error& e) {
        return error_reply(e);
    }
}

Reply RagService::handle_query(const std::string& body) const {
    try {
        const json j = parse_object(body);
        const std::string question = required_string(j, "question");
        if (is_blank(question)) {
            throw Error(ErrorCode::invalid_argument, "question must be nonempty");
        }
        const auto result = ask(question, parse_options(j));
        return json_reply(result.degraded ? 502 : 200, answer_json(result));
    } catch (const Error& e) {
        return error_reply(e);
    }
}

Reply RagService::handle_feedback(const std::string& body) {
    try {
        const json j = parse_object(body);
        FeedbackRecord record;
        record.question = required_string(j, "question");
        record.final_answer = required_string(j, "final_answer");
        if (j.contains("reference_ids") && !j["reference_ids"].is_null()) {
            const json& ids = j["reference_ids"];
            if (!ids.is_array() || !std::all_of(ids.begin(), ids.end(), [](const json& v) { return v.is_string(); })) {
                throw Error(ErrorCode::invalid_argument, "'reference_ids' must be an array of strings");
            }
            record.reference_ids = ids.get<std::vector<std::string>>();
        }
        if (!j.contains("rating") || !j["rating"].is_number_integer()) {
            throw Error(ErrorCode::invalid_argument, "'rating' must be an integer from 1 to 5");
        }
        const auto rating = j["rating"].get<std::int64_t>();
        if (rating < lowest_rating || rating > highest_rating) {
            throw Error(ErrorCode::invalid_argument, "rating must be an integer from 1 to 5");
        }
        record.rating = static_cast<int>(rating);
        if (j.contains("comment") && !j["comment"].is_null()) {
            if (!j["comment"].is_string()) {
                throw Error(ErrorCode::invalid_argument, "'comment' must be a string");
            }
            record.comment = j["comment"].get<std::string>();
        }
        const auto stored = record_feedback(std::move(record));
        return json_reply(200, {{"id", stored.id}, {"timestamp", stored.timestamp}});
    } catch (const Error& e) {
        return error_reply(e);
    }
}

Reply RagService::handle_export(const std::optional<std::string>& min_rating,
                                const std::optional<std::string>& split) const {
    try {
        int threshold = config_.default_min_rating;
        if (min_rating) {
            const auto v = detail::parse_int<int>(*min_rating);
            if (!v || *v < lowest_rating || *v > highest_rating) {
                throw Error(ErrorCode::invalid_argument, "min_rating must be an integer from 1 to 5");
            }
            threshold = *v;
        }
        const std::string which = split.value_or("all");
        if (which != "all" && which != "train" && which != "test") {
            throw Error(ErrorCode::invalid_argument, "split must be train, test or all");
        }
        const auto bundle = training_bundle(threshold);
        std::string body;
        if (which != "test") {
            body += guanaco_text(bundle.train);
        }
        if (which != "train") {
            body += guanaco_text(bundle.test);
        }
        return {200, std::move(body), "text/plain; charset=utf-8"};
    } catch (const Error& e) {
        return error_reply(e);
    }
}

Reply RagService::handle_health() const {
    std::size_t documents = 0;
    {
        const std::shared_lock read(state_mutex_);
        documents = documents_.size();
    }
    return json_reply(200, {{"status", "ok"},
                            {"collection_size", collection_size()},
                            {"documents", documents},
                            {"dimension", collection_->dimension()},
                            {"feedback_records", feedback_records().size()},
                            {"providers", providers_.modes()}});
}

// ---------------------------------------------------------------------------

void register_routes(httplib::Server& server, RagService& service) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    auto send = [](httplib::Response& res, const Reply& reply) {
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    };
    auto param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
        if (!req.has_param(key)) {
            return std::nullopt;
        }
        return req.get_param_value(key);
    };
    server.Post("/ingest", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.handle_ingest(req.body));
    });
    server.Post("/query", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.handle_query(req.body));
    });
    server.Post("/feedback", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.handle_feedback(req.body));
    });
    server.Get("/export/training", [&service, send, param](const httplib::Request& req, httplib::Response& res) {
        send(res, service.handle_export(param(req, "min_rating"), param(req, "split")));
    });
    server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.handle_health());
    });
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            message = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", message}}.dump(-1, ' ', false, json::error_handler_t::replace),
                        "application/json");
    });
}

}  // namespace qimrag::service
