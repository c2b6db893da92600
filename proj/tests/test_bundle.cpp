#include <cmath>

#include "demailly/bundle_ops.hpp"
#include "demailly/errors.hpp"
#include "doctest.h"

using namespace demailly;

namespace {

Eigen::MatrixXcd test_unitary(int r) {
    // Fixed constant unitary: eigenvectors of a fixed Hermitian matrix.
    Eigen::MatrixXcd q(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) q(i, j) = cplx(0.3 * (i + 1) + 0.1 * j, 0.2 * (i - j));
    Eigen::MatrixXcd h = q + q.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    return es.eigenvectors();
}

double max_diff(const MatrixFormField& a, const MatrixFormField& b) {
    double m = 0.0;
    for (int p = 0; p < a.points(); ++p) m = std::max(m, (a.at(p) - b.at(p)).norm());
    return m;
}

double max_diff(const HermitianMatrixField& a, const HermitianMatrixField& b) {
    double m = 0.0;
    for (int p = 0; p < a.points(); ++p) m = std::max(m, (a.at(p) - b.at(p)).norm());
    return m;
}

} // namespace

TEST_CASE("eig_sorted on constant diagonal and zero fields") {
    GridSpec g(8);
    HermitianMatrixField h = HermitianMatrixField::constant_diag(g, {1.0, -1.0});
    EigenField e = eig_sorted(h);
    for (int p = 0; p < g.size(); ++p) {
        CHECK(e.lambda(p, 0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(e.lambda(p, 1) == doctest::Approx(-1.0).epsilon(1e-14));
        CHECK((e.u_at(p) - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
    }
    HermitianMatrixField z(g, 3);
    EigenField ez = eig_sorted(z);
    for (int i = 0; i < 3; ++i) CHECK(ez.lambda(0, i) == 0.0);
}

TEST_CASE("eig_sorted: ordering, unitarity, reconstruction, trace identity") {
    GridSpec g(16);
    HermitianMatrixField h = random_hermitian_band_limited(g, 3, 42u, 2, 1.0, false);
    const EigenField e = eig_sorted(h);
    for (int p = 0; p < g.size(); ++p) {
        ConstMatMap u = e.u_at(p);
        CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-10);
        Eigen::VectorXd lam(3);
        double sum = 0.0;
        for (int i = 0; i < 3; ++i) {
            lam(i) = e.lambda(p, i);
            sum += lam(i);
            if (i > 0) CHECK(e.lambda(p, i - 1) >= e.lambda(p, i));
        }
        CHECK(std::abs(sum - h.at(p).trace().real()) < 1e-10);
        Eigen::MatrixXcd rec = u * lam.cast<cplx>().asDiagonal() * u.adjoint();
        CHECK((rec - h.at(p)).norm() < 1e-10);
    }
}

TEST_CASE("lambda_max_field basics") {
    GridSpec g(8);
    HermitianMatrixField z(g, 2);
    ScalarField lz = lambda_max_field(z);
    for (int p = 0; p < g.size(); ++p) CHECK(lz.v[p] == 0.0);

    HermitianMatrixField h = random_hermitian_band_limited(g, 2, 9u, 2, 1.0, true);
    ScalarField lh = lambda_max_field(h);
    for (int p = 0; p < g.size(); ++p) CHECK(lh.v[p] >= -1e-14); // traceless forces top >= 0

    HermitianMatrixField d = HermitianMatrixField::constant_diag(g, {0.7, -0.7});
    ScalarField ld = lambda_max_field(d);
    for (int p = 0; p < g.size(); ++p) CHECK(ld.v[p] == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("exp_herm and log_spd") {
    GridSpec g(8);
    HermitianMatrixField z(g, 2);
    HermitianMatrixField ez = exp_herm(z);
    for (int p = 0; p < g.size(); ++p)
        CHECK((ez.at(p) - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-14);

    HermitianMatrixField d = HermitianMatrixField::constant_diag(g, {0.9, -0.9});
    HermitianMatrixField ed = exp_herm(d);
    for (int p = 0; p < g.size(); ++p) {
        CHECK(std::abs(ed.at(p)(0, 0) - std::exp(0.9)) < 1e-13);
        CHECK(std::abs(ed.at(p)(1, 1) - std::exp(-0.9)) < 1e-13);
    }

    // Round trip and det = 1 on traceless fields with ||H|| <= 3.
    HermitianMatrixField h = random_hermitian_band_limited(g, 3, 5u, 2, 1.2, true);
    HermitianMatrixField back = log_spd(exp_herm(h));
    CHECK(max_diff(back, h) < 1e-9);
    HermitianMatrixField eh = exp_herm(h);
    for (int p = 0; p < g.size(); ++p)
        CHECK(std::abs(eh.at(p).determinant() - cplx(1.0)) < 1e-9);

    // Non-positive-definite input is rejected with location info.
    HermitianMatrixField bad = HermitianMatrixField::constant_diag(g, {1.0, -0.5});
    try {
        log_spd(bad);
        FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.min_eig() == doctest::Approx(-0.5));
    }
}

TEST_CASE("covariant_d0: identity, A = 0 reduction, Leibniz rule") {
    GridSpec g(32);
    ConnectionData a(random_form_band_limited(g, 2, FormKind::DzbarCoeff, 3u, 2, 0.4));

    HermitianMatrixField id = HermitianMatrixField::constant(g, Eigen::MatrixXcd::Identity(2, 2));
    CHECK(covariant_d0(id, a).max_norm() < 1e-12);

    HermitianMatrixField t = random_hermitian_band_limited(g, 2, 8u, 3, 0.8, false);
    ConnectionData zero = ConnectionData::zero(g, 2);
    MatrixFormField dt = covariant_d0(t, zero);
    MatrixFormField plain = mat_derivative(t, DerivMode::Holo);
    CHECK(max_diff(dt, plain) < 1e-13);

    // d0(T^2) = (d0 T) T + T (d0 T); T band-limited so T^2 stays resolved.
    HermitianMatrixField t2(g, 2);
    for (int p = 0; p < g.size(); ++p) t2.at(p) = t.at(p) * t.at(p);
    MatrixFormField lhs = covariant_d0(t2, a);
    MatrixFormField d0t = covariant_d0(t, a);
    MatrixFormField rhs(g, 2, FormKind::DzCoeff);
    for (int p = 0; p < g.size(); ++p)
        rhs.at(p) = d0t.at(p) * t.at(p) + t.at(p) * d0t.at(p);
    CHECK(max_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("dbar_end: zero input, scalar reduction pins the contraction") {
    GridSpec g(32);
    ConnectionData a(random_form_band_limited(g, 2, FormKind::DzbarCoeff, 4u, 2, 0.4));
    MatrixFormField zero(g, 2, FormKind::DzCoeff);
    CHECK(dbar_end(zero, a).max_norm() < 1e-14);

    // A = 0, S = du Id: contraction must equal -Delta u Id.
    ScalarField u = band_limited_random(g, 17u, 3, 1.0);
    ComplexCoefficientField du = derivative(u, DerivMode::Holo);
    MatrixFormField s(g, 2, FormKind::DzCoeff);
    for (int p = 0; p < g.size(); ++p)
        s.at(p) = du[p] * Eigen::MatrixXcd::Identity(2, 2);
    MatrixFormField d = dbar_end(s, ConnectionData::zero(g, 2));
    CHECK(d.kind == FormKind::Density);
    ScalarField lu = laplacian(u);
    double m = 0.0;
    for (int p = 0; p < g.size(); ++p)
        m = std::max(m, (d.at(p) + lu.v[p] * Eigen::MatrixXcd::Identity(2, 2)).norm());
    CHECK(m < 1e-10);
}

TEST_CASE("dbar_end commutes with constant unitary conjugation") {
    GridSpec g(16);
    Eigen::MatrixXcd u = test_unitary(2);
    ConnectionData a(random_form_band_limited(g, 2, FormKind::DzbarCoeff, 6u, 2, 0.5));
    MatrixFormField s = random_form_band_limited(g, 2, FormKind::DzCoeff, 7u, 2, 0.8);
    MatrixFormField lhs = dbar_end(conjugate(s, u), conjugate(a, u));
    MatrixFormField rhs = conjugate(dbar_end(s, a), u);
    CHECK(max_diff(lhs, rhs) < 1e-11);
}

TEST_CASE("demailly_D: zero field, diagonal reduction, trace and h-hermiticity") {
    GridSpec g(64);
    ConnectionData a(random_form_band_limited(g, 2, FormKind::DzbarCoeff, 11u, 2, 0.4));
    HermitianMatrixField z(g, 2);
    CHECK(demailly_D(z, a).max_norm() < 1e-12);

    // Diagonal reduction: D(diag(u,-u), 0) = diag(-Delta u, Delta u).
    ScalarField u = band_limited_random(g, 19u, 3, 0.5);
    HermitianMatrixField h(g, 2);
    for (int p = 0; p < g.size(); ++p) {
        h.at(p)(0, 0) = u.v[p];
        h.at(p)(1, 1) = -u.v[p];
    }
    MatrixFormField d = demailly_D(h, ConnectionData::zero(g, 2));
    ScalarField lu = laplacian(u);
    double m = 0.0;
    for (int p = 0; p < g.size(); ++p) {
        m = std::max(m, std::abs(d.at(p)(0, 0) + lu.v[p]));
        m = std::max(m, std::abs(d.at(p)(1, 1) - lu.v[p]));
        m = std::max(m, std::abs(d.at(p)(0, 1)));
    }
    CHECK(m < 1e-9);

    // tr D = 0 to quadrature tolerance on a smooth non-diagonal field.
    HermitianMatrixField hr = random_hermitian_band_limited(g, 2, 23u, 2, 0.5, true);
    MatrixFormField dr = demailly_D(hr, a);
    double tr = 0.0;
    for (int p = 0; p < g.size(); ++p) tr = std::max(tr, std::abs(dr.at(p).trace()));
    CHECK(tr < 1e-9);

    // g (Lambda i F0 + D) is Hermitian to discretization tolerance when the
    // curvature datum is the one induced by the connection.
    HermitianMatrixField f0 = connection_curvature(a);
    HermitianMatrixField ghr = exp_herm(hr);
    double asym = 0.0;
    for (int p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd x = ghr.at(p) * (f0.at(p) + dr.at(p));
        asym = std::max(asym, (x - x.adjoint()).norm());
    }
    CHECK(asym < 1e-8 + 100.0 / (g.n * g.n));
}

TEST_CASE("demailly_D linearization at the identity (Richardson)") {
    GridSpec g(16);
    ConnectionData a(random_form_band_limited(g, 2, FormKind::DzbarCoeff, 13u, 2, 0.3));
    HermitianMatrixField h = random_hermitian_band_limited(g, 2, 14u, 2, 1.0, true);
    // Linearized operator at g = Id: H -> dbar_end(d0 H).
    MatrixFormField lin = dbar_end(covariant_d0(h, a), a);
    double err[2];
    double eps = 1e-3;
    for (int k = 0; k < 2; ++k) {
        HermitianMatrixField eh = h;
        eh *= eps;
        MatrixFormField d = demailly_D(eh, a);
        double m = 0.0;
        for (int p = 0; p < g.size(); ++p) m = std::max(m, (d.at(p) / eps - lin.at(p)).norm());
        err[k] = m;
        eps *= 0.5;
    }
    CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.2)); // first-order remainder
}

TEST_CASE("demailly_D gauge covariance") {
    GridSpec g(16);
    Eigen::MatrixXcd u = test_unitary(2);
    ConnectionData a(random_form_band_limited(g, 2, FormKind::DzbarCoeff, 31u, 2, 0.4));
    HermitianMatrixField h = random_hermitian_band_limited(g, 2, 32u, 2, 0.7, true);
    MatrixFormField lhs = demailly_D(conjugate(h, u), conjugate(a, u));
    MatrixFormField rhs = conjugate(demailly_D(h, a), u);
    CHECK(max_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("eigenframe_connection: diagonal constant field has C = 0") {
    GridSpec g(8);
    HermitianMatrixField h = HermitianMatrixField::constant_diag(g, {1.0, -1.0});
    EigenframeConnection ec = eigenframe_connection(h, ConnectionData::zero(g, 2), 0.5);
    for (int p = 0; p < g.size(); ++p) {
        CHECK(ec.mask[p] == 1);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::abs(ec.c_at(p, i, j)) < 1e-14);
    }
}

TEST_CASE("eigenframe_connection: nilpotent constant connection gives C >= 0") {
    GridSpec g(16);
    Eigen::MatrixXcd nil = Eigen::MatrixXcd::Zero(2, 2);
    nil(0, 1) = 0.5;
    ConnectionData a(
        [&] {
            MatrixFormField f(g, 2, FormKind::DzbarCoeff);
            for (int p = 0; p < g.size(); ++p) f.at(p) = nil;
            return f;
        }());
    HermitianMatrixField h = gapped_random_hermitian(g, 2, 77u, 0.5, 2);
    EigenframeConnection ec = eigenframe_connection(h, a, 0.5);
    double cmin = 0.0, cmax = 0.0;
    int masked = 0;
    for (int p = 0; p < g.size(); ++p) {
        if (!ec.mask[p]) continue;
        ++masked;
        for (int i = 0; i < 2; ++i) {
            CHECK(ec.c_at(p, i, i) == 0.0);
            for (int j = 0; j < 2; ++j) {
                if (i == j) continue;
                cmin = std::min(cmin, ec.c_at(p, i, j));
                cmax = std::max(cmax, ec.c_at(p, i, j));
            }
        }
    }
    CHECK(masked == g.size());
    CHECK(cmin >= -1e-10);
    CHECK(cmax > 1e-4); // connection genuinely active
}

TEST_CASE("eigenframe_connection is invariant under constant conjugation") {
    GridSpec g(16);
    Eigen::MatrixXcd u = test_unitary(2);
    ConnectionData a(random_form_band_limited(g, 2, FormKind::DzbarCoeff, 41u, 2, 0.3));
    HermitianMatrixField h = gapped_random_hermitian(g, 2, 42u, 0.5, 2);
    EigenframeConnection ec1 = eigenframe_connection(h, a, 0.4);
    EigenframeConnection ec2 = eigenframe_connection(conjugate(h, u), conjugate(a, u), 0.4);
    double m = 0.0;
    for (int p = 0; p < g.size(); ++p)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                m = std::max(m, std::abs(ec1.c_at(p, i, j) - ec2.c_at(p, i, j)));
    CHECK(m < 1e-9);
}

TEST_CASE("herm_part and make_traceless") {
    GridSpec g(8);
    MatrixFormField x = random_form_band_limited(g, 2, FormKind::Density, 51u, 2, 1.0);
    HermitianMatrixField hp = herm_part(x);
    CHECK(hp.herm_defect() < 1e-14);
    make_traceless(hp);
    CHECK(hp.trace_defect() < 1e-14);
}
