#include "demailly/matrix_field.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "demailly/spectral.hpp"

namespace demailly {

double HermitianMatrixField::herm_defect() const {
    double m = 0.0;
    for (int p = 0; p < points(); ++p) {
        ConstMatMap x = at(p);
        m = std::max(m, (x - x.adjoint()).norm());
    }
    return m;
}

double HermitianMatrixField::trace_defect() const {
    double m = 0.0;
    for (int p = 0; p < points(); ++p) m = std::max(m, std::abs(at(p).trace()));
    return m;
}

double HermitianMatrixField::max_norm() const {
    double m = 0.0;
    for (int p = 0; p < points(); ++p) m = std::max(m, at(p).norm());
    return m;
}

HermitianMatrixField HermitianMatrixField::constant(GridSpec g, const Eigen::MatrixXcd& m) {
    HermitianMatrixField out(g, static_cast<int>(m.rows()));
    for (int p = 0; p < out.points(); ++p) out.at(p) = m;
    return out;
}

HermitianMatrixField HermitianMatrixField::constant_diag(GridSpec g, const std::vector<double>& d) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return constant(g, m);
}

double MatrixFormField::max_norm() const {
    double m = 0.0;
    for (int p = 0; p < points(); ++p) m = std::max(m, at(p).norm());
    return m;
}

ConnectionData::ConnectionData(MatrixFormField a01_) : a01(std::move(a01_)) {
    a01.kind = FormKind::DzbarCoeff;
    a10 = MatrixFormField(a01.grid, a01.rank, FormKind::DzCoeff);
    for (int p = 0; p < a01.points(); ++p) a10.at(p) = -a01.at(p).adjoint();
}

ConnectionData ConnectionData::zero(GridSpec g, int r) {
    return ConnectionData(MatrixFormField(g, r, FormKind::DzbarCoeff));
}

double EigenField::gap(int p) const {
    if (rank == 1) return std::numeric_limits<double>::infinity();
    double g = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < rank; ++i) g = std::min(g, lambda(p, i) - lambda(p, i + 1));
    return g;
}

ScalarField EigenField::lambda_field(int i) const {
    ScalarField out(grid);
    for (int p = 0; p < grid.size(); ++p) out.v[p] = lambda(p, i);
    return out;
}

HermitianMatrixField conjugate(const HermitianMatrixField& X, const Eigen::MatrixXcd& U) {
    HermitianMatrixField out(X.grid, X.rank);
    for (int p = 0; p < X.points(); ++p) out.at(p) = U * X.at(p) * U.adjoint();
    return out;
}

MatrixFormField conjugate(const MatrixFormField& X, const Eigen::MatrixXcd& U) {
    MatrixFormField out(X.grid, X.rank, X.kind);
    for (int p = 0; p < X.points(); ++p) out.at(p) = U * X.at(p) * U.adjoint();
    return out;
}

ConnectionData conjugate(const ConnectionData& A, const Eigen::MatrixXcd& U) {
    return ConnectionData(conjugate(A.a01, U));
}

HermitianMatrixField random_hermitian_band_limited(GridSpec g, int rank, std::uint64_t seed,
                                                   int kmax, double amplitude, bool traceless) {
    HermitianMatrixField out(g, rank);
    std::uint64_t s = seed;
    // Entry order fixed: diagonal first, then upper triangle.
    for (int i = 0; i < rank; ++i) {
        ScalarField d = band_limited_random(g, s++, kmax, amplitude);
        for (int p = 0; p < g.size(); ++p) out.at(p)(i, i) = d.v[p];
    }
    for (int i = 0; i < rank; ++i) {
        for (int j = i + 1; j < rank; ++j) {
            ScalarField re = band_limited_random(g, s++, kmax, amplitude);
            ScalarField im = band_limited_random(g, s++, kmax, amplitude);
            for (int p = 0; p < g.size(); ++p) {
                out.at(p)(i, j) = cplx(re.v[p], im.v[p]);
                out.at(p)(j, i) = cplx(re.v[p], -im.v[p]);
            }
        }
    }
    if (traceless) {
        for (int p = 0; p < g.size(); ++p) {
            MatMap m = out.at(p);
            m -= (m.trace() / static_cast<double>(rank)) * Eigen::MatrixXcd::Identity(rank, rank);
        }
    }
    return out;
}

MatrixFormField random_form_band_limited(GridSpec g, int rank, FormKind kind, std::uint64_t seed,
                                         int kmax, double amplitude) {
    MatrixFormField out(g, rank, kind);
    std::uint64_t s = seed;
    for (int i = 0; i < rank; ++i) {
        for (int j = 0; j < rank; ++j) {
            ScalarField re = band_limited_random(g, s++, kmax, amplitude);
            ScalarField im = band_limited_random(g, s++, kmax, amplitude);
            for (int p = 0; p < g.size(); ++p) out.at(p)(i, j) = cplx(re.v[p], im.v[p]);
        }
    }
    return out;
}

HermitianMatrixField gapped_random_hermitian(GridSpec g, int rank, std::uint64_t seed,
                                             double gap_min, int kmax) {
    // Traceless diagonal spread with unit spacing, then a perturbation small
    // enough that Weyl's inequality keeps the gap above gap_min.
    std::vector<double> d(rank);
    double shift = 0.5 * (rank - 1);
    for (int i = 0; i < rank; ++i) d[i] = shift - i;
    HermitianMatrixField out = HermitianMatrixField::constant_diag(g, d);
    double amp = std::max(0.0, (1.0 - gap_min) / (4.0 * rank));
    out += random_hermitian_band_limited(g, rank, seed, kmax, amp, true);
    return out;
}

} // namespace demailly
