#ifndef DEMAILLY_CONTINUATION_HPP
#define DEMAILLY_CONTINUATION_HPP

#include <functional>
#include <optional>
#include <variant>

#include "demailly/diagnostics.hpp"
#include "demailly/solvers.hpp"

namespace demailly {

struct PathConfig {
    double dt_init = 0.05;
    double dt_min = 1e-6;
    double dt_max = 0.25;
    double newton_tol = 1e-10;
    int max_newton = 30;
    double destab_f_floor = -8.0;
    double destab_lambda_ceiling = 2980.9579870417283; // e^8; trigger on ln of this
    int record_every = 1;
    double gap_floor = 1e-3;

    void validate() const; // 0 < dt_min <= dt_init <= dt_max <= 1
};

struct StepSuccess {
    MetricState state;
    double t_new = 0.0;
    int newton_iters = 0;
    double norm = 0.0;
};
struct StepFailure {
    enum class Kind { NonPositiveM, MaxIterExceeded, LineSearchStall } kind;
    double norm = 0.0;
};
using StepResult = std::variant<StepSuccess, StepFailure>;

/// One predictor/corrector step from t to min(t+dt, 1): secant extrapolation
/// through the previous accepted state (when available) followed by Newton.
/// Failures leave the caller's state untouched.
StepResult advance_step(const MetricState& state,
                        const std::optional<std::pair<double, MetricState>>& prev,
                        const SystemParams& params, double t, double dt,
                        const PathConfig& config);

/// Everything needed to resume a run bit-for-bit: current and previous
/// accepted states plus the adapted step size.
struct PathCheckpoint {
    double t = 0.0;
    double dt = 0.0;
    MetricState state;
    std::optional<std::pair<double, MetricState>> prev;
};

enum class PathStatus { Success, Destabilized, Stalled };

struct PathOutcome {
    PathStatus status = PathStatus::Stalled;
    MetricState final_state;
    double t_reached = 0.0;
    double best_norm = 0.0;
    std::optional<DestabilizationReport> report;
};

struct PathResult {
    PathOutcome outcome;
    std::vector<DiagnosticsRecord> records; // one per accepted step
};

using SnapshotSink = std::function<void(const PathCheckpoint&, int accepted_index)>;

/// Drives the family from t = 0 (or a checkpoint) to t = 1. Step size halves
/// on failure and grows by 1.5x (capped) on acceptance; when dt underflows or
/// a degeneration threshold trips, the destabilization detector classifies
/// the outcome. Deterministic for fixed inputs.
PathResult run_path(const SystemParams& params, const MetricState& state0,
                    const PathConfig& config, std::optional<PathCheckpoint> resume = {},
                    const SnapshotSink& snapshot_sink = {});

} // namespace demailly

#endif
