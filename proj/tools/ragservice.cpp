// HTTP front end for ingest, query, feedback and training export.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include "qimrag/error.hpp"
#include "qimrag/providers.hpp"
#include "qimrag/service.hpp"

namespace {

httplib::Server* running = nullptr;

void on_signal(int) {
    if (running != nullptr) {
        running->stop();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ragservice: retrieval-augmented answering with a QIM judge"};
    std::string corpus;
    std::string cache;
    std::string providers;
    std::string host = "127.0.0.1";
    int port = 8080;
    app.add_option("--corpus", corpus, "directory of <doc_id>.txt files ingested at startup")
        ->check(CLI::ExistingDirectory);
    app.add_option("--cache", cache, "state directory (collection, manifest, feedback.log)")->required();
    app.add_option("--port", port, "listen port; 0 picks a free port")->check(CLI::Range(0, 65535));
    app.add_option("--host", host, "listen address");
    app.add_option("--providers", providers, "provider config JSON")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = providers.empty() ? qimrag::ProvidersConfig{} : qimrag::ProvidersConfig::from_file(providers);
        config.apply_process_env();

        qimrag::service::ServiceConfig service_config;
        service_config.cache_dir = cache;
        if (!corpus.empty()) {
            service_config.corpus_dir = corpus;
        }
        qimrag::service::RagService service(service_config, qimrag::make_providers(config));

        httplib::Server server;
        qimrag::service::register_routes(server, service);
        const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
        if (bound < 0) {
            std::cerr << "ragservice: cannot bind " << host << ":" << port << "\n";
            return 1;
        }
        running = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "ragservice listening on http://" << host << ":" << bound << " with "
                  << service.collection_size() << " chunks" << std::endl;
        server.listen_after_bind();
        running = nullptr;
    } catch (const qimrag::Error& e) {
        std::cerr << "ragservice: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
