#ifndef DEMAILLY_SYSTEM_HPP
#define DEMAILLY_SYSTEM_HPP

#include "demailly/bundle_ops.hpp"

namespace demailly {

// The coupled system, in the log/trace-free unknowns (f, H), H = ln g:
//   R1 = log det M - lambda f - log a0,   M = (beta/r + Delta f + (1-t)alpha) Id - e^f H
//   R2 = [c0 + D(exp H, A)]_herm,traceless + e^f H
// A state is admissible while M is positive definite (NonPositiveM otherwise).
// The Hermitian projection in R2 is consistent: the curvature identity
// X^dagger = g X g^{-1} for X = c0 + D forces the skew part of X to vanish
// wherever the projected equation holds.

/// t-independent data of a scenario.
struct SystemParams {
    int rank = 0;
    ScalarField beta;          // Lambda i tr F0
    HermitianMatrixField c0;   // trace-free part of Lambda i F0
    ConnectionData A;
    double alpha = 0.0;        // cushion constant, > 0
    double lambda_exp = 0.0;   // exponent of e^{lambda f}
    ScalarField a0;            // positive right-hand side at t = 0

    double deg_E() const { return mean(beta); }
};

/// Unknowns (f, H); g = exp H with tr H = 0; h = e^{-f} g h0 implicitly.
struct MetricState {
    ScalarField f;
    HermitianMatrixField H;
};

/// Tangent direction (df, dH), dH traceless Hermitian.
struct StateDelta {
    ScalarField df;
    HermitianMatrixField dH;
};

struct Residual {
    ScalarField r1;
    HermitianMatrixField r2;
    double norm = 0.0; // sqrt(mean r1^2 + mean ||r2||_F^2)
};

/// M = (beta/r + Delta f + (1-t) alpha) Id - e^f H.
HermitianMatrixField assemble_M(const MetricState& state, const SystemParams& params, double t);

/// System residual; throws NonPositiveM when M is not positive definite.
Residual residual(const MetricState& state, const SystemParams& params, double t);

/// Directional derivative of demailly_D at a fixed base point, with the
/// exponential differentiated through its eigen-decomposition (divided
/// differences), so the map is exactly linear in dH.
class DemaillyDLinearization {
public:
    DemaillyDLinearization(EigenField eig, const ConnectionData* A);
    MatrixFormField apply(const HermitianMatrixField& dH) const;
    const EigenField& eig() const { return eig_; }
    const HermitianMatrixField& g() const { return g_; }
    const HermitianMatrixField& ginv() const { return ginv_; }

    /// dexp of the base point: dg for a given dH.
    HermitianMatrixField dexp(const HermitianMatrixField& dH) const;

private:
    EigenField eig_;
    const ConnectionData* A_;
    HermitianMatrixField g_, ginv_;
    MatrixFormField s_;              // g^{-1} d0 g
    std::vector<double> phi_;        // divided differences of exp, per point
};

/// Cached Jacobian data at an admissible state; applies the linearization
/// matrix-free. Construction throws NonPositiveM off the admissible cone.
class LinearizationPoint {
public:
    LinearizationPoint(const MetricState& state, const SystemParams& params, double t);

    const Residual& base() const { return base_; }
    Residual apply(const StateDelta& delta) const;

    const MetricState& state() const { return state_; }
    const SystemParams& params() const { return *params_; }
    double t() const { return t_; }
    /// Constant-coefficient preconditioner data.
    double mean_tr_minv() const { return mean_tr_minv_; }
    double mean_expf() const { return mean_expf_; }

private:
    MetricState state_;
    const SystemParams* params_;
    double t_;
    ScalarField expf_;
    HermitianMatrixField m_, minv_;
    DemaillyDLinearization dlin_;
    Residual base_;
    double mean_tr_minv_ = 0.0, mean_expf_ = 0.0;
};

/// Public contract: J(state) delta, built fresh (tests, finite-difference
/// cross-checks). Solvers hold a LinearizationPoint instead.
Residual apply_linearization(const MetricState& state, const SystemParams& params, double t,
                             const StateDelta& delta);

double residual_norm(const ScalarField& r1, const HermitianMatrixField& r2);

} // namespace demailly

#endif
