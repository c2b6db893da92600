#include <cmath>

#include "demailly/continuation.hpp"
#include "demailly/errors.hpp"
#include "doctest.h"

using namespace demailly;

namespace {

std::pair<SystemParams, MetricState> sum_setup(GridSpec g, double d1, double d2, double margin,
                                               double lambda) {
    ScalarField beta(g, d1 + d2);
    HermitianMatrixField c0 =
        HermitianMatrixField::constant_diag(g, {(d1 - d2) / 2, (d2 - d1) / 2});
    return setup_t0(beta, c0, ConnectionData::zero(g, 2), margin, lambda);
}

ConnectionData nilpotent_connection(GridSpec g, double eps) {
    MatrixFormField a01(g, 2, FormKind::DzbarCoeff);
    for (int p = 0; p < g.size(); ++p) a01.at(p)(0, 1) = eps;
    return ConnectionData(std::move(a01));
}

} // namespace

TEST_CASE("record: constant rank-2 model pins e^f lambda_max = c along the path") {
    GridSpec g(16);
    ScalarField beta(g, 4.0);
    HermitianMatrixField c0 = HermitianMatrixField::constant_diag(g, {1.0, -1.0});
    auto [params, state] = setup_t0(beta, c0, ConnectionData::zero(g, 2), 1.0, 2.0);
    PathConfig config;
    PathResult res = run_path(params, state, config);
    REQUIRE(res.outcome.status == PathStatus::Success);
    for (const auto& rec : res.records) {
        CHECK(rec.sup_ef_lambda_max == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(rec.l1_ok);
        CHECK(rec.l1_slack > 0.0);
    }
}

TEST_CASE("record: rank-1 scenario has identically zero lambda_max") {
    GridSpec g(16);
    ScalarField beta(g, 3.0);
    auto [params, state] = setup_t0(beta, HermitianMatrixField(g, 1), ConnectionData::zero(g, 1),
                                    1.0, 2.0);
    EstimateConstants consts = assemble_constants(params);
    DiagnosticsRecord rec = record(state, params, consts, 0.0, 0, 0.0);
    CHECK(rec.sup_lambda_max == 0.0);
    CHECK(rec.osc_lambda_max == 0.0);
    CHECK(rec.sup_ef_lambda_max == 0.0);
    CHECK(rec.subharm_ok);
    CHECK(rec.gposi_applicable);
}

TEST_CASE("verify_apriori_bounds: ample path passes, corrupted record fails by name") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, 1.0, 1.0, 4.0);
    EstimateConstants consts = assemble_constants(params);
    PathConfig config;
    PathResult res = run_path(params, state, config);
    REQUIRE(res.outcome.status == PathStatus::Success);

    CheckReport report = verify_apriori_bounds(res.records, params, consts);
    CHECK(report.all_passed());
    for (const auto& chk : report.checks) {
        INFO(chk.name);
        if (chk.applicable) CHECK(chk.pass);
    }

    // Harness self-test: blow up one measured value and expect check (b) to
    // fail and to name the offending t.
    auto corrupted = res.records;
    const std::size_t k = corrupted.size() / 2;
    corrupted[k].sup_ef_lambda_max *= 1e6;
    corrupted[k].keyest_slack = consts.c_star - corrupted[k].sup_ef_lambda_max;
    corrupted[k].keyest_ok = false;
    CheckReport bad = verify_apriori_bounds(corrupted, params, consts);
    CHECK(!bad.all_passed());
    bool found = false;
    for (const auto& chk : bad.checks) {
        if (chk.name == "keyest_ef_lambda_max") {
            found = true;
            CHECK(!chk.pass);
            CHECK(chk.worst_t == corrupted[k].t);
        }
    }
    CHECK(found);
}

TEST_CASE("verify_deltanorm: trivial and converged states pass") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, 1.0, 1.0, 4.0);

    MetricState flat;
    flat.f = ScalarField(g, -0.2);
    flat.H = HermitianMatrixField(g, 2);
    DeltanormResult trivial = verify_deltanorm(flat, params);
    CHECK(trivial.pass); // 0 <= -e^f + C

    NewtonOptions opt;
    NewtonResult mid = newton_solve(state, params, 0.5, opt);
    REQUIRE(mid.status == NewtonStatus::Converged);
    DeltanormResult dn = verify_deltanorm(mid.state, params);
    CHECK(dn.pass);
    CHECK(dn.max_violation <= dn.slack);
}

TEST_CASE("verify_laplace_identity: constant and diagonal reductions") {
    GridSpec g(32);
    HermitianMatrixField hconst = HermitianMatrixField::constant_diag(g, {0.8, -0.8});
    LaplaceIdentityResult c =
        verify_laplace_identity(hconst, ConnectionData::zero(g, 2), 0.5);
    CHECK(c.masked_fraction == 1.0);
    CHECK(c.max_masked_residual < 1e-10);

    // Diagonal field: identity reduces to Delta u = Delta u.
    ScalarField u = band_limited_random(g, 5u, 2, 0.3);
    u += 1.0; // keep the gap uniform so the sorted order never swaps
    HermitianMatrixField hdiag(g, 2);
    for (int p = 0; p < g.size(); ++p) {
        hdiag.at(p)(0, 0) = u.v[p];
        hdiag.at(p)(1, 1) = -u.v[p];
    }
    LaplaceIdentityResult d =
        verify_laplace_identity(hdiag, ConnectionData::zero(g, 2), 0.5);
    CHECK(d.masked_fraction == 1.0);
    CHECK(d.max_masked_residual < 1e-8);
}

TEST_CASE("verify_laplace_identity converges under grid refinement") {
    // Same continuum data sampled at n = 32 and n = 64; the masked residual
    // must drop by at least 4x (spectral, so usually far more).
    double res[2];
    int k = 0;
    for (int n : {32, 64}) {
        GridSpec g(n);
        HermitianMatrixField h = gapped_random_hermitian(g, 2, 2024u, 0.5, 5);
        ConnectionData a = nilpotent_connection(g, 0.5);
        LaplaceIdentityResult r = verify_laplace_identity(h, a, 0.5);
        CHECK(r.masked_fraction == 1.0);
        res[k++] = r.max_masked_residual;
    }
    CHECK(res[0] / res[1] >= 4.0);
}

TEST_CASE("detect_destabilization: synthetic collapsing state") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, -1.0, 1.0, 4.0);
    MetricState collapsing;
    collapsing.f = ScalarField(g, -6.0);
    collapsing.H = HermitianMatrixField::constant_diag(g, {-12.0, 12.0});
    std::optional<DestabilizationReport> rep =
        detect_destabilization(collapsing, params, 0.5);
    REQUIRE(rep.has_value());
    CHECK(rep->rank_pi == 1);
    CHECK(rep->m_t == doctest::Approx(12.0));
    CHECK(rep->degQ_estimate == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(rep->resolved_fraction == 1.0);
    CHECK(rep->pi.herm_defect() < 1e-10);
    // pi is idempotent.
    double idem = 0.0;
    for (int p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd m = rep->pi.at(p);
        idem = std::max(idem, (m * m - m).norm());
    }
    CHECK(idem < 1e-8);
    // The collapse is already resolved at the sigma = 1 end of the probe:
    // successive powers differ only at the collapsed-eigenvalue scale there.
    REQUIRE(rep->sigma_deltas.size() >= 2);
    CHECK(rep->sigma_deltas.front() < 1e-4);
}

TEST_CASE("detect_destabilization: identical inputs give bit-identical reports") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, -1.0, 1.0, 4.0);
    MetricState collapsing;
    collapsing.f = band_limited_random(g, 99u, 1, 0.01);
    collapsing.f += -6.0;
    collapsing.H = HermitianMatrixField::constant_diag(g, {-12.0, 12.0});
    collapsing.H += random_hermitian_band_limited(g, 2, 98u, 1, 0.05, true);
    auto r1 = detect_destabilization(collapsing, params, 0.5);
    auto r2 = detect_destabilization(collapsing, params, 0.5);
    REQUIRE(r1.has_value());
    REQUIRE(r2.has_value());
    CHECK(r1->degQ_estimate == r2->degQ_estimate);
    CHECK(r1->m_t == r2->m_t);
    CHECK(r1->eps_cut == r2->eps_cut);
    CHECK(r1->second_fundamental_norm == r2->second_fundamental_norm);
    CHECK(r1->sigma_deltas == r2->sigma_deltas);
    for (int p = 0; p < g.size(); ++p)
        CHECK((r1->pi.at(p) - r2->pi.at(p)).norm() == 0.0);
}

TEST_CASE("verify_deltanorm only reports on non-solution states") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, 1.0, 1.0, 4.0);
    MetricState junk;
    junk.f = band_limited_random(g, 7u, 2, 0.3);
    junk.H = random_hermitian_band_limited(g, 2, 8u, 2, 1.5, true);
    DeltanormResult dn = verify_deltanorm(junk, params); // no claim off the solution set
    CHECK(std::isfinite(dn.max_violation));
}

TEST_CASE("detect_destabilization: identity g~ is inconclusive") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, -1.0, 1.0, 4.0);
    MetricState flat;
    flat.f = ScalarField(g, -9.0);
    flat.H = HermitianMatrixField(g, 2);
    CHECK(!detect_destabilization(flat, params, 0.4).has_value());
}

TEST_CASE("estimate_quotient_degree: trivial projector, gauge invariance, errors") {
    GridSpec g(16);
    auto [params, state] = sum_setup(g, 2.0, -1.0, 1.0, 4.0);

    HermitianMatrixField zero(g, 2);
    CHECK(estimate_quotient_degree(zero, params) ==
          doctest::Approx(params.deg_E()).epsilon(1e-12));

    HermitianMatrixField pi = HermitianMatrixField::constant_diag(g, {1.0, 0.0});
    CHECK(estimate_quotient_degree(pi, params) == doctest::Approx(-1.0).epsilon(1e-9));

    // Constant unitary conjugation of (pi, c0, A) leaves the estimate fixed.
    Eigen::MatrixXcd q(2, 2);
    q << cplx(0.2, 0.0), cplx(0.5, -0.4), cplx(0.5, 0.4), cplx(-0.3, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q);
    Eigen::MatrixXcd uu = es.eigenvectors();
    SystemParams cparams = params;
    cparams.c0 = conjugate(params.c0, uu);
    cparams.A = conjugate(params.A, uu);
    CHECK(estimate_quotient_degree(conjugate(pi, uu), cparams) ==
          doctest::Approx(-1.0).epsilon(1e-9));

    HermitianMatrixField bad = HermitianMatrixField::constant_diag(g, {0.7, 0.0});
    CHECK_THROWS_AS(estimate_quotient_degree(bad, params), NotAProjector);
}

TEST_CASE("assemble_constants: bounds comfortably dominate the constant model") {
    GridSpec g(16);
    ScalarField beta(g, 4.0);
    HermitianMatrixField c0 = HermitianMatrixField::constant_diag(g, {1.0, -1.0});
    auto [params, state] = setup_t0(beta, c0, ConnectionData::zero(g, 2), 1.0, 2.0);
    EstimateConstants consts = assemble_constants(params);
    CHECK(consts.griffiths_positive);
    CHECK(consts.c_star > 1.0); // measured sup e^f lambda_max is exactly 1
    CHECK(consts.b_l1 == doctest::Approx(3.0));
    CHECK(consts.green_sup > 0.0);
    CHECK(consts.green_l1 > 0.0);
}
