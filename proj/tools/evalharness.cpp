// Cosine-similarity scoring of answers against reference documents.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "qimrag/error.hpp"
#include "qimrag/eval.hpp"
#include "qimrag/providers.hpp"

int main(int argc, char** argv) {
    CLI::App app{"evalharness: score answers against references and summarize"};
    std::string answers;
    std::string refs;
    std::string out;
    std::string providers;
    std::size_t dimension = 0;
    app.add_option("--answers", answers, "directory of <doc_id>.txt answers")->required()->check(CLI::ExistingDirectory);
    app.add_option("--refs", refs, "directory of <doc_id>.txt references")->required()->check(CLI::ExistingDirectory);
    app.add_option("--out", out, "report CSV path")->required();
    app.add_option("--providers", providers, "provider config JSON (embedder role is used)")
        ->check(CLI::ExistingFile);
    app.add_option("--dimension", dimension, "override the embedding dimension")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = providers.empty() ? qimrag::ProvidersConfig{} : qimrag::ProvidersConfig::from_file(providers);
        config.apply_process_env();
        if (dimension != 0) {
            config.embedder.dimension = dimension;
        }
        const auto embedder = qimrag::make_embedder(config.embedder);
        const auto summary = qimrag::eval::aggregate(qimrag::eval::score_directories(answers, refs, *embedder));
        qimrag::eval::write_report(summary, out);
        std::cout << "scored " << summary.rows.size() << " documents: ave "
                  << qimrag::eval::format_fixed(summary.ave) << ", sd " << qimrag::eval::format_fixed(summary.sd)
                  << "\n";
    } catch (const qimrag::Error& e) {
        std::cerr << "evalharness: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
