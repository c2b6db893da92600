#include "demailly/continuation.hpp"

#include <cmath>

#include "demailly/errors.hpp"

namespace demailly {

void PathConfig::validate() const {
    if (!(dt_min > 0.0)) throw ValidationError("dt_min", "> 0");
    if (!(dt_min <= dt_init)) throw ValidationError("dt_init", ">= dt_min");
    if (!(dt_init <= dt_max)) throw ValidationError("dt_max", ">= dt_init");
    if (!(dt_max <= 1.0)) throw ValidationError("dt_max", "<= 1");
    if (!(newton_tol > 0.0)) throw ValidationError("newton_tol", "> 0");
    if (max_newton < 1) throw ValidationError("max_newton", ">= 1");
    if (record_every < 1) throw ValidationError("record_every", ">= 1");
}

StepResult advance_step(const MetricState& state,
                        const std::optional<std::pair<double, MetricState>>& prev,
                        const SystemParams& params, double t, double dt,
                        const PathConfig& config) {
    const double t_new = std::min(t + dt, 1.0);

    MetricState predicted = state;
    if (prev && t > prev->first) {
        // Secant extrapolation through the two most recent accepted states.
        const double fac = (t_new - t) / (t - prev->first);
        ScalarField df = state.f - prev->second.f;
        df *= fac;
        predicted.f += df;
        HermitianMatrixField dH = state.H - prev->second.H;
        dH *= fac;
        predicted.H += dH;
        make_traceless(predicted.H);
    }

    try {
        residual(predicted, params, t_new);
    } catch (const NonPositiveM&) {
        return StepFailure{StepFailure::Kind::NonPositiveM, 0.0};
    }

    NewtonOptions opt;
    opt.tol = config.newton_tol;
    opt.max_iter = config.max_newton;
    NewtonResult res = newton_solve(predicted, params, t_new, opt);
    switch (res.status) {
    case NewtonStatus::Converged:
        return StepSuccess{std::move(res.state), t_new, res.iters, res.norm};
    case NewtonStatus::NonPositiveStart:
        return StepFailure{StepFailure::Kind::NonPositiveM, res.norm};
    case NewtonStatus::MaxIterExceeded:
        return StepFailure{StepFailure::Kind::MaxIterExceeded, res.norm};
    case NewtonStatus::LineSearchStall:
    default:
        return StepFailure{StepFailure::Kind::LineSearchStall, res.norm};
    }
}

namespace {

bool thresholds_tripped(const DiagnosticsRecord& rec, const PathConfig& config) {
    return rec.inf_f < config.destab_f_floor ||
           rec.sup_lambda_max > std::log(config.destab_lambda_ceiling);
}

} // namespace

PathResult run_path(const SystemParams& params, const MetricState& state0,
                    const PathConfig& config, std::optional<PathCheckpoint> resume,
                    const SnapshotSink& snapshot_sink) {
    config.validate();
    EstimateConstants consts = assemble_constants(params);

    PathResult result;
    double t, dt;
    MetricState state;
    std::optional<std::pair<double, MetricState>> prev;
    if (resume) {
        t = resume->t;
        dt = resume->dt;
        state = resume->state;
        prev = resume->prev;
    } else {
        t = 0.0;
        dt = config.dt_init;
        state = state0;
    }

    double best_norm = residual(state, params, t).norm;
    int accepted = 0;

    auto classify_degeneration = [&](double at_t) {
        result.outcome.final_state = state;
        result.outcome.t_reached = at_t;
        result.outcome.best_norm = best_norm;
        std::optional<DestabilizationReport> rep = detect_destabilization(state, params, at_t);
        if (rep) {
            result.outcome.status = PathStatus::Destabilized;
            result.outcome.report = std::move(rep);
        } else {
            result.outcome.status = PathStatus::Stalled;
        }
    };

    while (t < 1.0) {
        StepResult step = advance_step(state, prev, params, t, dt, config);
        if (std::holds_alternative<StepFailure>(step)) {
            dt *= 0.5;
            if (dt < config.dt_min) {
                classify_degeneration(t);
                return result;
            }
            continue;
        }
        StepSuccess& ok = std::get<StepSuccess>(step);
        prev = std::make_pair(t, std::move(state));
        t = ok.t_new;
        state = std::move(ok.state);
        best_norm = ok.norm;
        ++accepted;

        result.records.push_back(
            record(state, params, consts, t, ok.newton_iters, ok.norm));
        if (snapshot_sink && accepted % config.record_every == 0) {
            PathCheckpoint cp{t, std::min(1.5 * dt, config.dt_max), state, prev};
            snapshot_sink(cp, accepted);
        }

        if (thresholds_tripped(result.records.back(), config)) {
            classify_degeneration(t);
            return result;
        }
        dt = std::min(1.5 * dt, config.dt_max);
    }

    result.outcome.status = PathStatus::Success;
    result.outcome.final_state = state;
    result.outcome.t_reached = t;
    result.outcome.best_norm = best_norm;
    return result;
}

} // namespace demailly
