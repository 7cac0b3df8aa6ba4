#include "qimrag/providers.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "qimrag/embedding.hpp"
#include "qimrag/error.hpp"
#include "text_util.hpp"

namespace qimrag {

using nlohmann::json;

DetEmbedder::DetEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) {
        throw Error(ErrorCode::invalid_argument, "embedding dimension must be at least 1");
    }
}

EmbeddingVector DetEmbedder::embed(std::string_view text) {
    return det_embed(text, dimension_);
}

std::string FailingGenerator::generate(std::string_view) {
    throw Error(ErrorCode::provider_failure, "stub generator 'fail' always fails");
}

std::string QaTemplateGenerator::generate(std::string_view prompt) {
    std::string_view content = prompt;
    const auto open = prompt.find("<content>");
    const auto close = prompt.rfind("</content>");
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        content = prompt.substr(open + 9, close - open - 9);
    }

    std::string out;
    std::size_t emitted = 0;
    std::string sentence;
    auto flush = [&] {
        std::string clean;
        for (const char c : sentence) {
            const bool space = c == '\n' || c == '\r' || c == '\t' || c == ' ';
            if (space) {
                if (!clean.empty() && clean.back() != ' ') {
                    clean.push_back(' ');
                }
            } else {
                clean.push_back(c);
            }
        }
        sentence.clear();
        const auto trimmed = detail::trim(clean);
        const auto words = tokenize(trimmed);
        if (words.size() < 3 || emitted >= 8) {
            return;
        }
        std::string topic;
        for (std::size_t i = 0; i < std::min<std::size_t>(words.size(), 6); ++i) {
            topic += (i ? " " : "") + words[i];
        }
        out += "### Human: What does the document say about " + topic + "? ### Assistant: ";
        out += trimmed;
        out += '\n';
        ++emitted;
    };
    for (const char c : content) {
        sentence.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            flush();
        }
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------

namespace {

json post_json(const RemoteEndpoint& ep, const json& body) {
    httplib::Client client(ep.base_url);
    if (!client.is_valid()) {
        throw Error(ErrorCode::provider_failure, "unsupported provider URL '" + ep.base_url + "'");
    }
    const auto whole = static_cast<time_t>(ep.timeout_seconds);
    const auto micros = static_cast<time_t>((ep.timeout_seconds - static_cast<double>(whole)) * 1e6);
    client.set_connection_timeout(whole, micros);
    client.set_read_timeout(whole, micros);
    client.set_write_timeout(whole, micros);

    httplib::Headers headers;
    if (!ep.token_env.empty()) {
        if (const char* token = std::getenv(ep.token_env.c_str()); token != nullptr && *token != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }
    const auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::provider_failure,
                    ep.base_url + ep.path + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::provider_failure,
                    ep.base_url + ep.path + " returned HTTP " + std::to_string(res->status));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::provider_failure, "malformed provider response: " + std::string(e.what()));
    }
}

}  // namespace

HttpGenerator::HttpGenerator(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpGenerator::generate(std::string_view prompt) {
    const json reply = post_json(endpoint_, {{"model", endpoint_.model}, {"input", std::string(prompt)}});
    if (!reply.contains("output") || !reply["output"].is_string()) {
        throw Error(ErrorCode::provider_failure, "provider response lacks a string 'output'");
    }
    return reply["output"].get<std::string>();
}

HttpEmbedder::HttpEmbedder(RemoteEndpoint endpoint, std::size_t dimension)
    : endpoint_(std::move(endpoint)), dimension_(dimension) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
    const json reply = post_json(endpoint_, {{"model", endpoint_.model}, {"input", std::string(text)}});
    if (!reply.contains("embedding") || !reply["embedding"].is_array()) {
        throw Error(ErrorCode::provider_failure, "provider response lacks an 'embedding' array");
    }
    EmbeddingVector out;
    for (const auto& v : reply["embedding"]) {
        if (!v.is_number()) {
            throw Error(ErrorCode::provider_failure, "non-numeric embedding entry");
        }
        out.push_back(v.get<double>());
    }
    if (out.size() != dimension_) {
        throw Error(ErrorCode::provider_failure, "embedding has dimension " + std::to_string(out.size()) +
                                                     ", expected " + std::to_string(dimension_));
    }
    return out;
}

// ---------------------------------------------------------------------------

void ProviderConfig::validate() const {
    if (stub_id.has_value() == remote.has_value()) {
        throw Error(ErrorCode::invalid_argument, "provider needs exactly one of a stub id or a remote endpoint");
    }
    if (remote) {
        if (remote->base_url.empty()) {
            throw Error(ErrorCode::invalid_argument, "remote provider needs a base URL");
        }
        if (!(remote->timeout_seconds > 0.0)) {
            throw Error(ErrorCode::invalid_argument, "provider timeout must be positive");
        }
    }
    if (kind == ProviderKind::embedder && dimension == 0) {
        throw Error(ErrorCode::invalid_argument, "embedder dimension must be at least 1");
    }
}

namespace {

constexpr std::pair<const char*, ProviderConfig ProvidersConfig::*> roles[] = {
    {"embedder", &ProvidersConfig::embedder},
    {"fine_tuned", &ProvidersConfig::fine_tuned},
    {"foundational", &ProvidersConfig::foundational},
    {"qa_generator", &ProvidersConfig::qa_generator},
};

void read_role(const json& node, ProviderConfig& cfg) {
    if (!node.is_object()) {
        throw Error(ErrorCode::invalid_argument, "provider entry must be an object");
    }
    if (node.contains("stub")) {
        cfg.stub_id = node.at("stub").get<std::string>();
        cfg.remote.reset();
    }
    if (node.contains("url")) {
        RemoteEndpoint ep;
        ep.base_url = node.at("url").get<std::string>();
        ep.path = node.value("path", std::string("/"));
        ep.model = node.value("model", std::string());
        ep.token_env = node.value("token_env", std::string());
        ep.timeout_seconds = node.value("timeout_s", 30.0);
        cfg.remote = ep;
        if (!node.contains("stub")) {
            cfg.stub_id.reset();
        }
    }
    if (node.contains("dimension")) {
        cfg.dimension = node.at("dimension").get<std::size_t>();
    }
}

}  // namespace

ProvidersConfig ProvidersConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open provider config " + path.string());
    }
    ProvidersConfig cfg;
    try {
        const json doc = json::parse(in);
        for (const auto& [key, member] : roles) {
            if (doc.contains(key)) {
                read_role(doc.at(key), cfg.*member);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, "bad provider config: " + std::string(e.what()));
    }
    for (const auto& [key, member] : roles) {
        (cfg.*member).validate();
    }
    return cfg;
}

void ProvidersConfig::apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv) {
    for (const auto& [key, member] : roles) {
        ProviderConfig& cfg = this->*member;
        std::string prefix = "QIMRAG_";
        for (const char* p = key; *p; ++p) {
            prefix.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(*p))));
        }
        prefix.push_back('_');

        const auto stub = getenv(prefix + "STUB");
        const auto url = getenv(prefix + "URL");
        if (stub && url) {
            throw Error(ErrorCode::invalid_argument, prefix + "STUB and " + prefix + "URL are both set");
        }
        if (stub) {
            cfg.stub_id = *stub;
            cfg.remote.reset();
        }
        if (url) {
            cfg.remote = cfg.remote.value_or(RemoteEndpoint{});
            cfg.remote->base_url = *url;
            cfg.stub_id.reset();
        }
        if (cfg.remote) {
            if (const auto v = getenv(prefix + "PATH")) {
                cfg.remote->path = *v;
            }
            if (const auto v = getenv(prefix + "MODEL")) {
                cfg.remote->model = *v;
            }
            if (const auto v = getenv(prefix + "TOKEN_ENV")) {
                cfg.remote->token_env = *v;
            }
            if (const auto v = getenv(prefix + "TIMEOUT")) {
                const auto t = detail::parse_real(*v);
                if (!t) {
                    throw Error(ErrorCode::invalid_argument, prefix + "TIMEOUT is not a number");
                }
                cfg.remote->timeout_seconds = *t;
            }
        }
        if (cfg.kind == ProviderKind::embedder) {
            if (const auto v = getenv(prefix + "DIMENSION")) {
                const auto d = detail::parse_int<std::size_t>(*v);
                if (!d) {
                    throw Error(ErrorCode::invalid_argument, prefix + "DIMENSION is not an integer");
                }
                cfg.dimension = *d;
            }
        }
        cfg.validate();
    }
}

void ProvidersConfig::apply_process_env() {
    apply_env([](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (v == nullptr) {
            return std::nullopt;
        }
        return std::string(v);
    });
}

std::shared_ptr<Generator> make_generator(const ProviderConfig& config) {
    config.validate();
    if (config.remote) {
        return std::make_shared<HttpGenerator>(*config.remote);
    }
    const std::string& id = *config.stub_id;
    if (id == "echo") {
        return std::make_shared<EchoGenerator>();
    }
    if (id == "qa-template") {
        return std::make_shared<QaTemplateGenerator>();
    }
    if (id == "fail") {
        return std::make_shared<FailingGenerator>();
    }
    throw Error(ErrorCode::invalid_argument, "unknown generator stub '" + id + "'");
}

std::shared_ptr<Embedder> make_embedder(const ProviderConfig& config) {
    config.validate();
    if (config.remote) {
        return std::make_shared<HttpEmbedder>(*config.remote, config.dimension);
    }
    if (*config.stub_id == "det-embed") {
        return std::make_shared<DetEmbedder>(config.dimension);
    }
    throw Error(ErrorCode::invalid_argument, "unknown embedder stub '" + *config.stub_id + "'");
}

ProviderSet make_providers(const ProvidersConfig& config) {
    return {make_embedder(config.embedder), make_generator(config.fine_tuned),
            make_generator(config.foundational), make_generator(config.qa_generator)};
}

std::map<std::string, std::string> ProviderSet::modes() const {
    return {{"embedder", embedder->mode()},
            {"fine_tuned", fine_tuned->mode()},
            {"foundational", foundational->mode()},
            {"qa_generator", qa_generator->mode()}};
}

}  // namespace qimrag
