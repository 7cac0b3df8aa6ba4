// Perturbation sweep comparing cosine similarity with the quantized influence measure.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "qimrag/error.hpp"
#include "qimrag/similarity.hpp"
#include "qimrag/simlab.hpp"

int main(int argc, char** argv) {
    CLI::App app{"simlab: cosine vs QIM perturbation sweeps"};
    app.require_subcommand(1);

    auto* sweep = app.add_subcommand("sweep", "run a perturbation sweep and write CSV");
    std::size_t n = 1000;
    std::size_t q = qimrag::default_bin_count;
    bool q_is_bits = false;
    std::uint64_t seed = 0;
    double k_max = 2.0;
    double k_step = 0.1;
    std::size_t trials = 25;
    std::string out;
    sweep->add_option("--n", n, "vector size")->check(CLI::Range(std::size_t{2}, std::size_t{10'000'000}));
    sweep->add_option("--q", q, "bin count (or bit width with --q-bits)");
    sweep->add_flag("--q-bits", q_is_bits, "read --q as a bit width, using 2^q bins");
    sweep->add_option("--seed", seed, "64-bit seed");
    sweep->add_option("--k-max", k_max, "largest perturbation factor");
    sweep->add_option("--k-step", k_step, "perturbation factor step");
    sweep->add_option("--trials", trials, "trials per k")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        qimrag::simlab::SweepConfig cfg;
        cfg.n = n;
        cfg.q = q_is_bits ? qimrag::bin_count_from_bits(q) : q;
        if (cfg.q < qimrag::min_bin_count || cfg.q > qimrag::max_bin_count) {
            std::cerr << "simlab: bin count must be in [" << qimrag::min_bin_count << ", "
                      << qimrag::max_bin_count << "]\n";
            return 2;
        }
        cfg.seed = seed;
        cfg.k_values = qimrag::simlab::k_grid(k_max, k_step);
        cfg.trials_per_k = trials;
        const auto records = qimrag::simlab::run_sweep(cfg);
        qimrag::simlab::write_csv(records, out);
        std::cout << "wrote " << records.size() << " records to " << out << "\n";
    } catch (const qimrag::Error& e) {
        std::cerr << "simlab: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
