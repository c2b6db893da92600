#include <cmath>

#include "demailly/continuation.hpp"
#include "doctest.h"

using namespace demailly;

namespace {

std::pair<SystemParams, MetricState> sum_setup(GridSpec g, double d1, double d2, double margin,
                                               double lambda) {
    // Direct sum of two "line bundles" of degrees d1, d2 encoded as
    // constant curvature data.
    ScalarField beta(g, d1 + d2);
    HermitianMatrixField c0 =
        HermitianMatrixField::constant_diag(g, {(d1 - d2) / 2, (d2 - d1) / 2});
    return setup_t0(beta, c0, ConnectionData::zero(g, 2), margin, lambda);
}

double rank1_closed_form(double beta, double alpha, double lambda, double t) {
    return std::log((beta + (1.0 - t) * alpha) / (beta + alpha)) / lambda;
}

double max_abs(const ScalarField& u) {
    double m = 0.0;
    for (int p = 0; p < u.size(); ++p) m = std::max(m, std::abs(u.v[p]));
    return m;
}

} // namespace

TEST_CASE("advance_step tracks the rank-1 closed form") {
    GridSpec g(16);
    ScalarField beta(g, 3.0);
    auto [params, state] = setup_t0(beta, HermitianMatrixField(g, 1), ConnectionData::zero(g, 1),
                                    1.0, 2.0);
    PathConfig config;
    std::optional<std::pair<double, MetricState>> prev;
    double t = 0.0;
    for (int k = 0; k < 11 && t < 1.0; ++k) {
        StepResult step = advance_step(state, prev, params, t, 0.1, config);
        REQUIRE(std::holds_alternative<StepSuccess>(step));
        StepSuccess& ok = std::get<StepSuccess>(step);
        prev = std::make_pair(t, state);
        t = ok.t_new;
        state = ok.state;
        CHECK(max_abs(state.f - ScalarField(g, rank1_closed_form(3.0, 1.0, 2.0, t))) < 1e-8);
    }
    CHECK(t == 1.0);
}

TEST_CASE("advance_step: predictor leaving the cone fails without mutation") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, 1.0, 1.0, 4.0);
    MetricState prev_state = state;
    prev_state.H *= 0.9;
    // Huge dt relative to the last increment: the secant predictor scales the
    // H increment by dt/(t - t_prev) = 80 and M loses positivity.
    auto prev = std::make_optional(std::make_pair(0.19, prev_state));
    PathConfig config;
    StepResult step = advance_step(state, prev, params, 0.2, 0.8, config);
    REQUIRE(std::holds_alternative<StepFailure>(step));
    CHECK(std::get<StepFailure>(step).kind == StepFailure::Kind::NonPositiveM);
}

TEST_CASE("advance_step clamps to t = 1 exactly") {
    GridSpec g(16);
    ScalarField beta(g, 3.0);
    auto [params, state] = setup_t0(beta, HermitianMatrixField(g, 1), ConnectionData::zero(g, 1),
                                    1.0, 2.0);
    PathConfig config;
    NewtonOptions opt;
    NewtonResult at9 = newton_solve(state, params, 0.9, opt);
    REQUIRE(at9.status == NewtonStatus::Converged);
    StepResult step = advance_step(at9.state, std::nullopt, params, 0.9, 0.25, config);
    REQUIRE(std::holds_alternative<StepSuccess>(step));
    CHECK(std::get<StepSuccess>(step).t_new == 1.0);
}

TEST_CASE("run_path: ample direct sum reaches t = 1 with positive curvature") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, 1.0, 1.0, 4.0);
    PathConfig config;
    PathResult res = run_path(params, state, config);
    REQUIRE(res.outcome.status == PathStatus::Success);
    CHECK(res.outcome.t_reached == 1.0);
    CHECK(res.records.size() <= 40);

    // Monotone t sequence ending at 1, admissible all along.
    double last = 0.0;
    for (const auto& rec : res.records) {
        CHECK(rec.t > last);
        last = rec.t;
        CHECK(rec.min_eig_M > 0.0);
    }
    CHECK(last == 1.0);
}

TEST_CASE("run_path: nonample direct sum destabilizes with deg Q = -1") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, -1.0, 1.0, 4.0);
    CHECK(params.alpha == doctest::Approx(2.0).epsilon(1e-12));
    PathConfig config;
    PathResult res = run_path(params, state, config);
    REQUIRE(res.outcome.status == PathStatus::Destabilized);
    REQUIRE(res.outcome.report.has_value());
    const DestabilizationReport& rep = *res.outcome.report;
    CHECK(rep.rank_pi == 1);
    CHECK(rep.degQ_estimate == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(rep.second_fundamental_norm < 1e-10);
    CHECK(res.outcome.t_reached < 0.55);
    // The collapsing factor is the first coordinate direction.
    for (int p = 0; p < g.size(); ++p) {
        CHECK(std::abs(rep.pi.at(p)(0, 0) - cplx(1.0)) < 1e-10);
        CHECK(std::abs(rep.pi.at(p)(1, 1)) < 1e-10);
    }
}

TEST_CASE("run_path: constant rank-2 model succeeds in few steps") {
    GridSpec g(16);
    ScalarField beta(g, 4.0);
    HermitianMatrixField c0 = HermitianMatrixField::constant_diag(g, {1.0, -1.0});
    auto [params, state] = setup_t0(beta, c0, ConnectionData::zero(g, 2), 1.0, 2.0);
    PathConfig config;
    PathResult res = run_path(params, state, config);
    REQUIRE(res.outcome.status == PathStatus::Success);
    CHECK(res.records.size() <= 40);
}

TEST_CASE("run_path restarts bit-for-bit from a checkpoint") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, 1.0, 1.0, 4.0);
    PathConfig config;
    std::optional<PathCheckpoint> cp;
    const int resume_at = 2;
    auto sink = [&](const PathCheckpoint& c, int accepted) {
        if (accepted == resume_at) cp = c;
    };
    PathResult full = run_path(params, state, config, std::nullopt, sink);
    REQUIRE(full.outcome.status == PathStatus::Success);
    REQUIRE(cp.has_value());

    PathResult resumed = run_path(params, state, config, cp);
    REQUIRE(resumed.outcome.status == PathStatus::Success);
    REQUIRE(full.records.size() == resumed.records.size() + resume_at);
    for (std::size_t i = 0; i < resumed.records.size(); ++i) {
        const DiagnosticsRecord& a = full.records[i + resume_at];
        const DiagnosticsRecord& b = resumed.records[i];
        CHECK(a.t == b.t);
        CHECK(a.residual_norm == b.residual_norm);
        CHECK(a.sup_f == b.sup_f);
        CHECK(a.inf_f == b.inf_f);
        CHECK(a.sup_lambda_max == b.sup_lambda_max);
        CHECK(a.sup_ef_lambda_max == b.sup_ef_lambda_max);
        CHECK(a.min_eig_M == b.min_eig_M);
    }
    // Final fields identical to the last bit.
    for (int p = 0; p < g.size(); ++p) {
        CHECK(full.outcome.final_state.f.v[p] == resumed.outcome.final_state.f.v[p]);
        CHECK((full.outcome.final_state.H.at(p) - resumed.outcome.final_state.H.at(p)).norm() ==
              0.0);
    }
}
