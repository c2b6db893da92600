#ifndef DEMAILLY_BUNDLE_OPS_HPP
#define DEMAILLY_BUNDLE_OPS_HPP

#include "demailly/matrix_field.hpp"
#include "demailly/spectral.hpp"

namespace demailly {

// Covariant conventions, matching the scalar module:
//   d0 T       = dT + [A10, T]                     (dz coefficient)
//   dbar_A S   = dbar S + [A01, S]                 (S a dz coefficient)
//   dbar_end   returns Lambda sqrt(-1) dbar_A(S dz) = -2 (dbar S + [A01, S]),
// so that for S = du * Id with A = 0 the contraction is -Delta u * Id, and
// demailly_D(diag(u_i), 0) has diagonal -Delta u_i.

/// Pointwise eigen-decomposition, eigenvalues descending; each eigenvector is
/// rotated so its largest-modulus component is real positive.
EigenField eig_sorted(const HermitianMatrixField& H);

/// Top eigenvalue as a scalar field (continuous, not necessarily smooth).
ScalarField lambda_max_field(const HermitianMatrixField& H);

HermitianMatrixField exp_herm(const HermitianMatrixField& H);
/// Inverse of exp_herm on positive-definite fields; throws NotPositiveDefinite.
HermitianMatrixField log_spd(const HermitianMatrixField& G);

/// Entrywise spectral derivative of a matrix field.
MatrixFormField mat_derivative(const HermitianMatrixField& T, DerivMode mode);
MatrixFormField mat_derivative(const MatrixFormField& T, DerivMode mode);

/// d0 T = dT + [A10, T] on endomorphism fields.
MatrixFormField covariant_d0(const HermitianMatrixField& T, const ConnectionData& A);

/// Lambda sqrt(-1) dbar_A of a dz-coefficient field: -2 (dbar S + [A01, S]).
MatrixFormField dbar_end(const MatrixFormField& S, const ConnectionData& A);

/// D(g) = Lambda sqrt(-1) dbar_A(g^{-1} d0 g) for g = exp H. Returned raw:
/// D is g-twisted Hermitian (D^dagger = g D g^{-1}), not Hermitian itself;
/// callers that need the Hermitian part project it. Throws
/// NotPositiveDefinite when exp H overflows to non-finite values.
MatrixFormField demailly_D(const HermitianMatrixField& H, const ConnectionData& A);
/// Same, reusing a precomputed eigen-decomposition of H.
MatrixFormField demailly_D(const EigenField& eig, const ConnectionData& A);

/// Lambda sqrt(-1) of the curvature of the frame connection d + A10 + A01:
/// -2 dbar(A10) + 2 d(A01) + 2 [A10, A01], symmetrized. Presets fold this
/// into (beta, c0) so curvature data and connection stay consistent.
HermitianMatrixField connection_curvature(const ConnectionData& A);

/// (X + X^dagger)/2 of a density field, as a Hermitian field.
HermitianMatrixField herm_part(const MatrixFormField& X);
/// Subtracts (tr/r) Id pointwise.
void make_traceless(HermitianMatrixField& X);

/// Eigenframe connection coefficients of the sorted frame. The off-diagonal
/// frame-derivative term is obtained from first-order perturbation theory,
///   (U^* dH U)_{ij} / (lambda_j - lambda_i),
/// so no eigenvector field is ever differentiated; the ambient connection is
/// conjugated into the frame and added. C(p)(i,j) stores
/// -Lambda sqrt(-1) (A10^j_i wedge A01^i_j) with zero diagonal; mask marks
/// points whose spectral gap is at least gap_floor.
struct EigenframeConnection {
    EigenField eig;
    GridSpec grid;
    int rank = 0;
    std::vector<double> C;       // points * rank * rank, row-major (i, j)
    std::vector<std::uint8_t> mask;
    double c_at(int p, int i, int j) const {
        return C[(static_cast<std::size_t>(p) * rank + i) * rank + j];
    }
};
EigenframeConnection eigenframe_connection(const HermitianMatrixField& H, const ConnectionData& A,
                                           double gap_floor);

/// g * (exp of H) etc. convenience products used by the system assembly.
HermitianMatrixField exp_from_eig(const EigenField& eig, double scale = 1.0);

} // namespace demailly

#endif
