#ifndef DEMAILLY_MATRIX_FIELD_HPP
#define DEMAILLY_MATRIX_FIELD_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "demailly/grid.hpp"

namespace demailly {

using MatMap = Eigen::Map<Eigen::MatrixXcd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXcd>;

/// r x r Hermitian endomorphism per grid point (houses H = ln g, c0, M, R2,
/// pi). Blocks are stored contiguously per point, column-major.
struct HermitianMatrixField {
    GridSpec grid;
    int rank = 0;
    std::vector<cplx> a;

    HermitianMatrixField() = default;
    HermitianMatrixField(GridSpec g, int r)
        : grid(g), rank(r), a(static_cast<std::size_t>(g.size()) * r * r, cplx(0.0)) {}

    int points() const { return grid.size(); }
    MatMap at(int p) { return MatMap(a.data() + static_cast<std::size_t>(p) * rank * rank, rank, rank); }
    ConstMatMap at(int p) const {
        return ConstMatMap(a.data() + static_cast<std::size_t>(p) * rank * rank, rank, rank);
    }

    HermitianMatrixField& operator+=(const HermitianMatrixField& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
        return *this;
    }
    HermitianMatrixField& operator-=(const HermitianMatrixField& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
        return *this;
    }
    HermitianMatrixField& operator*=(double s) {
        for (cplx& x : a) x *= s;
        return *this;
    }
    friend HermitianMatrixField operator+(HermitianMatrixField x, const HermitianMatrixField& y) {
        return x += y;
    }
    friend HermitianMatrixField operator-(HermitianMatrixField x, const HermitianMatrixField& y) {
        return x -= y;
    }
    friend HermitianMatrixField operator*(double s, HermitianMatrixField x) { return x *= s; }

    /// max_p ||A(p) - A(p)^dagger||_F
    double herm_defect() const;
    /// max_p |tr A(p)|
    double trace_defect() const;
    /// max_p ||A(p)||_F
    double max_norm() const;

    static HermitianMatrixField constant(GridSpec g, const Eigen::MatrixXcd& m);
    static HermitianMatrixField constant_diag(GridSpec g, const std::vector<double>& d);
};

/// Matrix-valued form coefficient field (dz, dzbar, or contracted density);
/// carries the non-Hermitian intermediates of the covariant calculus.
struct MatrixFormField {
    GridSpec grid;
    int rank = 0;
    FormKind kind = FormKind::DzCoeff;
    std::vector<cplx> a;

    MatrixFormField() = default;
    MatrixFormField(GridSpec g, int r, FormKind k)
        : grid(g), rank(r), kind(k), a(static_cast<std::size_t>(g.size()) * r * r, cplx(0.0)) {}

    int points() const { return grid.size(); }
    MatMap at(int p) { return MatMap(a.data() + static_cast<std::size_t>(p) * rank * rank, rank, rank); }
    ConstMatMap at(int p) const {
        return ConstMatMap(a.data() + static_cast<std::size_t>(p) * rank * rank, rank, rank);
    }
    double max_norm() const;
};

/// Unitary-frame connection data: A01 is the dzbar coefficient, and
/// A10 = -(A01)^dagger is derived at construction (metric frame identity).
struct ConnectionData {
    MatrixFormField a01; // FormKind::DzbarCoeff
    MatrixFormField a10; // FormKind::DzCoeff, = -a01^dagger

    ConnectionData() = default;
    explicit ConnectionData(MatrixFormField a01_);
    static ConnectionData zero(GridSpec g, int r);

    GridSpec grid() const { return a01.grid; }
    int rank() const { return a01.rank; }
};

/// Pointwise spectral data of a Hermitian field: eigenvalues descending,
/// phase-fixed unitary eigenvector matrix, per-point spectral gap.
struct EigenField {
    GridSpec grid;
    int rank = 0;
    std::vector<double> lam; // points * rank, descending per point
    std::vector<cplx> u;     // unitary blocks, column-major

    EigenField() = default;
    EigenField(GridSpec g, int r)
        : grid(g), rank(r), lam(static_cast<std::size_t>(g.size()) * r),
          u(static_cast<std::size_t>(g.size()) * r * r, cplx(0.0)) {}

    double lambda(int p, int i) const { return lam[static_cast<std::size_t>(p) * rank + i]; }
    double& lambda(int p, int i) { return lam[static_cast<std::size_t>(p) * rank + i]; }
    MatMap u_at(int p) { return MatMap(u.data() + static_cast<std::size_t>(p) * rank * rank, rank, rank); }
    ConstMatMap u_at(int p) const {
        return ConstMatMap(u.data() + static_cast<std::size_t>(p) * rank * rank, rank, rank);
    }
    /// min over adjacent eigenvalue pairs; +inf when rank == 1.
    double gap(int p) const;
    ScalarField lambda_field(int i) const;
};

/// U X U^dagger conjugation by a constant unitary (gauge transform).
HermitianMatrixField conjugate(const HermitianMatrixField& X, const Eigen::MatrixXcd& U);
MatrixFormField conjugate(const MatrixFormField& X, const Eigen::MatrixXcd& U);
ConnectionData conjugate(const ConnectionData& A, const Eigen::MatrixXcd& U);

/// Deterministic band-limited random fields for presets and probes.
HermitianMatrixField random_hermitian_band_limited(GridSpec g, int rank, std::uint64_t seed,
                                                   int kmax, double amplitude, bool traceless);
MatrixFormField random_form_band_limited(GridSpec g, int rank, FormKind kind, std::uint64_t seed,
                                         int kmax, double amplitude);
/// Traceless Hermitian field with pointwise spectral gap >= gap_min:
/// fixed diagonal spread plus a small band-limited Hermitian perturbation.
HermitianMatrixField gapped_random_hermitian(GridSpec g, int rank, std::uint64_t seed,
                                             double gap_min, int kmax);

} // namespace demailly

#endif
