#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "qimrag/similarity.hpp"

namespace qimrag {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
    /// "stub" or "remote".
    virtual std::string mode() const = 0;
};

class Generator {
public:
    virtual ~Generator() = default;
    /// Throws Error(provider_failure) on timeout or a bad response.
    virtual std::string generate(std::string_view prompt) = 0;
    virtual std::string mode() const = 0;
};

// Builtin stubs -------------------------------------------------------------

class DetEmbedder final : public Embedder {
public:
    explicit DetEmbedder(std::size_t dimension);
    EmbeddingVector embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }
    std::string mode() const override { return "stub"; }

private:
    std::size_t dimension_;
};

/// Returns its input unchanged.
class EchoGenerator final : public Generator {
public:
    std::string generate(std::string_view prompt) override { return std::string(prompt); }
    std::string mode() const override { return "stub"; }
};

/// Always fails; exercises degradation paths.
class FailingGenerator final : public Generator {
public:
    std::string generate(std::string_view prompt) override;
    std::string mode() const override { return "stub"; }
};

/// Answers a Q&A-generation prompt with Human/Assistant lines built from the
/// sentences of the embedded content, one pair per sentence.
class QaTemplateGenerator final : public Generator {
public:
    std::string generate(std::string_view prompt) override;
    std::string mode() const override { return "stub"; }
};

class FunctionGenerator final : public Generator {
public:
    explicit FunctionGenerator(std::function<std::string(std::string_view)> fn) : fn_(std::move(fn)) {}
    std::string generate(std::string_view prompt) override { return fn_(prompt); }
    std::string mode() const override { return "stub"; }

private:
    std::function<std::string(std::string_view)> fn_;
};

// Remote providers ----------------------------------------------------------

/// Plain HTTP endpoint. Requests are JSON `{"model": ..., "input": ...}`;
/// generators expect `{"output": "..."}` back and embedders `{"embedding": [...]}`.
struct RemoteEndpoint {
    std::string base_url;           // scheme://host[:port]
    std::string path = "/";
    std::string model;
    std::string token_env;          // name of the variable holding a bearer token
    double timeout_seconds = 30.0;
};

class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(RemoteEndpoint endpoint);
    std::string generate(std::string_view prompt) override;
    std::string mode() const override { return "remote"; }

private:
    RemoteEndpoint endpoint_;
};

class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(RemoteEndpoint endpoint, std::size_t dimension);
    EmbeddingVector embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }
    std::string mode() const override { return "remote"; }

private:
    RemoteEndpoint endpoint_;
    std::size_t dimension_;
};

// Configuration -------------------------------------------------------------

enum class ProviderKind { embedder, generator };

/// Exactly one of stub_id / remote is set.
struct ProviderConfig {
    ProviderKind kind = ProviderKind::generator;
    std::optional<std::string> stub_id;
    std::optional<RemoteEndpoint> remote;
    std::size_t dimension = 256;  // embedders only

    void validate() const;
};

/// The four roles the pipeline and data tooling draw on.
struct ProvidersConfig {
    ProviderConfig embedder{ProviderKind::embedder, "det-embed", std::nullopt, 256};
    ProviderConfig fine_tuned{ProviderKind::generator, "echo", std::nullopt, 0};
    ProviderConfig foundational{ProviderKind::generator, "echo", std::nullopt, 0};
    ProviderConfig qa_generator{ProviderKind::generator, "qa-template", std::nullopt, 0};

    /// JSON file with optional keys embedder, fine_tuned, foundational,
    /// qa_generator; each either {"stub": id} or {"url", "path", "model",
    /// "token_env", "timeout_s"}; embedders also take "dimension".
    static ProvidersConfig from_file(const std::filesystem::path& path);

    /// QIMRAG_<ROLE>_{STUB,URL,PATH,MODEL,TOKEN_ENV,TIMEOUT}, plus
    /// QIMRAG_EMBEDDER_DIMENSION. ROLE is EMBEDDER, FINE_TUNED, FOUNDATIONAL or
    /// QA_GENERATOR. Setting STUB drops a remote endpoint and setting URL drops a stub.
    void apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv);
    void apply_process_env();
};

struct ProviderSet {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<Generator> fine_tuned;
    std::shared_ptr<Generator> foundational;
    std::shared_ptr<Generator> qa_generator;

    /// Role name to "stub" / "remote".
    std::map<std::string, std::string> modes() const;
};

ProviderSet make_providers(const ProvidersConfig& config);
std::shared_ptr<Generator> make_generator(const ProviderConfig& config);
std::shared_ptr<Embedder> make_embedder(const ProviderConfig& config);

}  // namespace qimrag
