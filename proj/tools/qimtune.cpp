// Coordinate-descent LoRA tuning against a lookup-table objective.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "qimrag/error.hpp"
#include "qimrag/tuner.hpp"

int main(int argc, char** argv) {
    using namespace qimrag::tuner;

    CLI::App app{"qimtune: tune (r, alpha, dropout) over a loss table"};
    std::string fixture;
    std::string trace_out;
    double threshold = 0.12;
    std::size_t max_iterations = default_max_iterations;
    std::vector<double> initial{64, 16, 0.01};
    Ranges ranges{{8, 16, 32, 64}, {8, 16, 32, 64}, {0.001, 0.01, 0.1}};

    app.add_option("--fixture", fixture, "CSV with header r,alpha,dropout,loss")->required()->check(CLI::ExistingFile);
    app.add_option("--threshold", threshold, "stop once the incumbent loss is at or below this");
    app.add_option("--max-iterations", max_iterations)->check(CLI::PositiveNumber);
    app.add_option("--initial", initial, "r,alpha,dropout")->delimiter(',')->expected(3);
    app.add_option("--r", ranges.r, "candidate ranks")->delimiter(',');
    app.add_option("--alpha", ranges.alpha, "candidate scaling factors")->delimiter(',');
    app.add_option("--dropout", ranges.dropout, "candidate dropout probabilities")->delimiter(',');
    app.add_option("--trace", trace_out, "write the evaluation trace CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (initial[0] < 1 || initial[0] != static_cast<double>(static_cast<std::uint32_t>(initial[0]))) {
            throw qimrag::Error(qimrag::ErrorCode::invalid_argument, "initial r must be a positive integer");
        }
        const ParamPoint start{static_cast<std::uint32_t>(initial[0]), initial[1], initial[2]};
        Objective objective(load_fixture_objective(fixture));
        const auto result = tune(start, ranges, objective, threshold, max_iterations);
        if (!trace_out.empty()) {
            write_trace_csv(result.trace, trace_out);
        }
        std::cout << "best r=" << result.best.r << " alpha=" << result.best.alpha
                  << " dropout=" << result.best.dropout << " loss=" << result.loss << "\n"
                  << "stop=" << stop_reason_name(result.stop) << " iterations=" << result.iterations
                  << " evaluations=" << result.trace.size() << "\n";
        return result.converged ? 0 : 2;
    } catch (const qimrag::Error& e) {
        std::cerr << "qimtune: " << e.what() << "\n";
        return 1;
    }
}
