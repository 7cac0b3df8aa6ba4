#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qimrag::tuner {

/// LoRA settings: attention dimension, scaling factor, dropout probability.
struct ParamPoint {
    std::uint32_t r = 64;
    double alpha = 16.0;
    double dropout = 0.01;

    auto operator<=>(const ParamPoint&) const = default;
};

enum class Axis { dropout, alpha, r };

double value_of(const ParamPoint& point, Axis axis);
/// Copy of point with one coordinate replaced. r must be a positive integer.
ParamPoint with_value(ParamPoint point, Axis axis, double value);
std::string_view axis_name(Axis axis);

struct Ranges {
    std::vector<std::uint32_t> r;
    std::vector<double> alpha;
    std::vector<double> dropout;

    /// Nonempty axes; r > 0, alpha > 0, 0 <= dropout < 1.
    void validate() const;
    std::vector<double> candidates(Axis axis) const;
};

enum class Phase { initial, dropout_sweep, alpha_sweep, r_sweep };

std::string_view phase_name(Phase phase);
Phase sweep_phase(Axis axis);

struct TraceEntry {
    Phase phase = Phase::initial;
    std::size_t iteration = 0;
    ParamPoint point;
    std::optional<double> loss;  // empty when the evaluation failed
    std::string error;

    bool operator==(const TraceEntry&) const = default;
};

using Evaluator = std::function<double(const ParamPoint&)>;

/// Memoizing wrapper around a loss function. Every fresh evaluation, failed or
/// not, is appended to the trace; memo hits are not.
class Objective {
public:
    /// budget caps fresh evaluations. A timed-out evaluation counts as failed
    /// and is abandoned on a detached thread.
    explicit Objective(Evaluator evaluator, std::optional<std::size_t> budget = std::nullopt,
                       std::optional<std::chrono::milliseconds> timeout = std::nullopt);

    /// Loss at point, or empty if the evaluator threw, timed out or returned a
    /// negative or non-finite value. Throws budget_exhausted.
    std::optional<double> evaluate(const ParamPoint& point, Phase phase, std::size_t iteration);

    std::size_t evaluations() const { return trace_.size(); }
    const std::vector<TraceEntry>& trace() const { return trace_; }

private:
    Evaluator evaluator_;
    std::optional<std::size_t> budget_;
    std::optional<std::chrono::milliseconds> timeout_;
    std::map<ParamPoint, std::optional<double>> memo_;
    std::vector<TraceEntry> trace_;
};

struct SweepResult {
    double best_value = 0.0;
    double best_loss = 0.0;
    std::size_t evaluations = 0;  // fresh evaluations only
};

/// Evaluates base with axis set to each candidate and keeps the lowest loss,
/// ties going to the smallest candidate. Failed points are skipped; throws
/// evaluation_failed if every candidate fails.
SweepResult sweep_param(const ParamPoint& base, Axis axis, std::span<const double> candidates, Objective& objective,
                        std::size_t iteration = 1);

enum class StopReason { threshold_reached, max_iterations, stalled, budget_exhausted };

std::string_view stop_reason_name(StopReason reason);

struct TuneResult {
    ParamPoint best;
    double loss = 0.0;
    bool converged = false;
    StopReason stop = StopReason::threshold_reached;
    std::size_t iterations = 0;  // outer iterations started
    std::vector<TraceEntry> trace;
};

inline constexpr std::size_t default_max_iterations = 5;

/// Coordinate descent: each outer iteration sweeps dropout, then alpha, then r,
/// moving the incumbent after every sweep. The incumbent's own value joins each
/// sweep. The threshold is tested before each outer iteration, so a started
/// iteration always runs all three sweeps.
TuneResult tune(const ParamPoint& initial, const Ranges& ranges, Objective& objective, double threshold,
                std::size_t max_iterations = default_max_iterations);

/// Header `phase,iteration,r,alpha,dropout,loss`; failed evaluations leave loss blank.
void write_trace_csv(std::span<const TraceEntry> trace, const std::filesystem::path& path);
std::string trace_csv(std::span<const TraceEntry> trace);

/// Lookup table read from a CSV with header `r,alpha,dropout,loss`. Repeated
/// points must agree. Unknown points make the evaluator throw.
Evaluator load_fixture_objective(const std::filesystem::path& path);

}  // namespace qimrag::tuner
