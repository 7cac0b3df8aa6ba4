#include "qimrag/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <memory>
#include <thread>

#include "qimrag/error.hpp"
#include "text_util.hpp"

namespace qimrag::tuner {

double value_of(const ParamPoint& point, Axis axis) {
    switch (axis) {
        case Axis::dropout:
            return point.dropout;
        case Axis::alpha:
            return point.alpha;
        case Axis::r:
            return static_cast<double>(point.r);
    }
    return 0.0;
}

ParamPoint with_value(ParamPoint point, Axis axis, double value) {
    switch (axis) {
        case Axis::dropout:
            point.dropout = value;
            break;
        case Axis::alpha:
            point.alpha = value;
            break;
        case Axis::r:
            if (!(value >= 1.0 && value <= 4294967295.0) || std::floor(value) != value) {
                throw Error(ErrorCode::invalid_argument, "r must be a positive integer");
            }
            point.r = static_cast<std::uint32_t>(value);
            break;
    }
    return point;
}

std::string_view axis_name(Axis axis) {
    switch (axis) {
        case Axis::dropout:
            return "dropout";
        case Axis::alpha:
            return "alpha";
        case Axis::r:
            return "r";
    }
    return "?";
}

void Ranges::validate() const {
    if (r.empty() || alpha.empty() || dropout.empty()) {
        throw Error(ErrorCode::invalid_argument, "every axis needs at least one candidate");
    }
    for (const auto v : r) {
        if (v == 0) {
            throw Error(ErrorCode::invalid_argument, "r candidates must be positive");
        }
    }
    for (const double v : alpha) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::invalid_argument, "alpha candidates must be positive");
        }
    }
    for (const double v : dropout) {
        if (!(v >= 0.0 && v < 1.0)) {
            throw Error(ErrorCode::invalid_argument, "dropout candidates must lie in [0, 1)");
        }
    }
}

std::vector<double> Ranges::candidates(Axis axis) const {
    switch (axis) {
        case Axis::dropout:
            return dropout;
        case Axis::alpha:
            return alpha;
        case Axis::r:
            return {r.begin(), r.end()};
    }
    return {};
}

std::string_view phase_name(Phase phase) {
    switch (phase) {
        case Phase::initial:
            return "initial";
        case Phase::dropout_sweep:
            return "dropout-sweep";
        case Phase::alpha_sweep:
            return "alpha-sweep";
        case Phase::r_sweep:
            return "r-sweep";
    }
    return "?";
}

Phase sweep_phase(Axis axis) {
    switch (axis) {
        case Axis::dropout:
            return Phase::dropout_sweep;
        case Axis::alpha:
            return Phase::alpha_sweep;
        case Axis::r:
            return Phase::r_sweep;
    }
    return Phase::initial;
}

std::string_view stop_reason_name(StopReason reason) {
    switch (reason) {
        case StopReason::threshold_reached:
            return "threshold-reached";
        case StopReason::max_iterations:
            return "max-iterations";
        case StopReason::stalled:
            return "stalled";
        case StopReason::budget_exhausted:
            return "budget-exhausted";
    }
    return "?";
}

// ---------------------------------------------------------------------------

Objective::Objective(Evaluator evaluator, std::optional<std::size_t> budget,
                     std::optional<std::chrono::milliseconds> timeout)
    : evaluator_(std::move(evaluator)), budget_(budget), timeout_(timeout) {
    if (!evaluator_) {
        throw Error(ErrorCode::invalid_argument, "objective needs an evaluator");
    }
    if (timeout_ && timeout_->count() <= 0) {
        throw Error(ErrorCode::invalid_argument, "evaluation timeout must be positive");
    }
}

std::optional<double> Objective::evaluate(const ParamPoint& point, Phase phase, std::size_t iteration) {
    if (const auto it = memo_.find(point); it != memo_.end()) {
        return it->second;
    }
    if (budget_ && trace_.size() >= *budget_) {
        throw Error(ErrorCode::budget_exhausted,
                    "evaluation budget of " + std::to_string(*budget_) + " exhausted");
    }

    TraceEntry entry{phase, iteration, point, std::nullopt, {}};
    try {
        double loss = 0.0;
        if (timeout_) {
            auto task = std::make_shared<std::packaged_task<double()>>(
                [fn = evaluator_, point] { return fn(point); });
            auto future = task->get_future();
            std::thread([task] { (*task)(); }).detach();
            if (future.wait_for(*timeout_) != std::future_status::ready) {
                throw Error(ErrorCode::evaluation_failed,
                            "evaluation timed out after " + std::to_string(timeout_->count()) + " ms");
            }
            loss = future.get();
        } else {
            loss = evaluator_(point);
        }
        if (!std::isfinite(loss) || loss < 0.0) {
            throw Error(ErrorCode::evaluation_failed, "loss must be finite and nonnegative");
        }
        entry.loss = loss;
    } catch (const std::exception& e) {
        entry.error = e.what();
    }
    memo_.emplace(point, entry.loss);
    trace_.push_back(std::move(entry));
    return trace_.back().loss;
}

SweepResult sweep_param(const ParamPoint& base, Axis axis, std::span<const double> candidates, Objective& objective,
                        std::size_t iteration) {
    if (candidates.empty()) {
        throw Error(ErrorCode::invalid_argument, "sweep needs at least one candidate");
    }
    std::vector<double> ordered(candidates.begin(), candidates.end());
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

    const std::size_t before = objective.evaluations();
    std::optional<SweepResult> best;
    for (const double value : ordered) {
        const auto loss = objective.evaluate(with_value(base, axis, value), sweep_phase(axis), iteration);
        // Ascending order plus strict improvement leaves ties with the smallest value.
        if (loss && (!best || *loss < best->best_loss)) {
            best = SweepResult{value, *loss, 0};
        }
    }
    if (!best) {
        throw Error(ErrorCode::evaluation_failed,
                    "every candidate failed in the " + std::string(axis_name(axis)) + " sweep");
    }
    best->evaluations = objective.evaluations() - before;
    return *best;
}

TuneResult tune(const ParamPoint& initial, const Ranges& ranges, Objective& objective, double threshold,
                std::size_t max_iterations) {
    ranges.validate();
    if (!(threshold > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "threshold must be positive");
    }

    TuneResult result;
    result.best = initial;
    const auto initial_loss = objective.evaluate(initial, Phase::initial, 0);
    if (!initial_loss) {
        throw Error(ErrorCode::evaluation_failed, "initial point could not be evaluated: " +
                                                      objective.trace().back().error);
    }
    result.loss = *initial_loss;

    try {
        while (result.loss > threshold) {
            if (result.iterations == max_iterations) {
                result.stop = StopReason::max_iterations;
                break;
            }
            ++result.iterations;
            const ParamPoint start = result.best;
            for (const Axis axis : {Axis::dropout, Axis::alpha, Axis::r}) {
                auto candidates = ranges.candidates(axis);
                candidates.push_back(value_of(result.best, axis));
                const auto sweep = sweep_param(result.best, axis, candidates, objective, result.iterations);
                result.best = with_value(result.best, axis, sweep.best_value);
                result.loss = sweep.best_loss;
            }
            if (result.loss > threshold && result.best == start) {
                result.stop = StopReason::stalled;
                break;
            }
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::budget_exhausted) {
            throw;
        }
        result.stop = StopReason::budget_exhausted;
    }
    result.converged = result.loss <= threshold;
    if (result.converged) {
        result.stop = StopReason::threshold_reached;
    }
    result.trace = objective.trace();
    return result;
}

// ---------------------------------------------------------------------------

std::string trace_csv(std::span<const TraceEntry> trace) {
    std::string out = "phase,iteration,r,alpha,dropout,loss\n";
    for (const TraceEntry& e : trace) {
        out += phase_name(e.phase);
        out += ',' + std::to_string(e.iteration);
        out += ',' + std::to_string(e.point.r);
        out += ',' + detail::format_shortest(e.point.alpha);
        out += ',' + detail::format_shortest(e.point.dropout);
        out += ',';
        if (e.loss) {
            out += detail::format_shortest(*e.loss);
        }
        out += '\n';
    }
    return out;
}

void write_trace_csv(std::span<const TraceEntry> trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
    }
    out << trace_csv(trace);
    if (!out.flush()) {
        throw Error(ErrorCode::io_failure, "write failed for " + path.string());
    }
}

Evaluator load_fixture_objective(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "r,alpha,dropout,loss") {
        throw Error(ErrorCode::corrupt_file, path.string() + ": expected header r,alpha,dropout,loss");
    }
    auto table = std::make_shared<std::map<ParamPoint, double>>();
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const auto fields = detail::split(trimmed, ',');
        const auto where = path.string() + ":" + std::to_string(number);
        if (fields.size() != 4) {
            throw Error(ErrorCode::corrupt_file, where + ": expected 4 fields");
        }
        const auto r = detail::parse_int<std::uint32_t>(fields[0]);
        const auto alpha = detail::parse_real(fields[1]);
        const auto dropout = detail::parse_real(fields[2]);
        const auto loss = detail::parse_real(fields[3]);
        if (!r || !alpha || !dropout || !loss) {
            throw Error(ErrorCode::corrupt_file, where + ": unparseable field");
        }
        const ParamPoint point{*r, *alpha, *dropout};
        const auto [it, inserted] = table->emplace(point, *loss);
        if (!inserted && it->second != *loss) {
            throw Error(ErrorCode::corrupt_file, where + ": conflicting loss for a repeated point");
        }
    }
    return [table](const ParamPoint& p) {
        const auto it = table->find(p);
        if (it == table->end()) {
            throw Error(ErrorCode::not_found, "fixture has no loss for r=" + std::to_string(p.r) +
                                                  " alpha=" + detail::format_shortest(p.alpha) +
                                                  " dropout=" + detail::format_shortest(p.dropout));
        }
        return it->second;
    };
}

}  // namespace qimrag::tuner
