#ifndef DEMAILLY_SOLVERS_HPP
#define DEMAILLY_SOLVERS_HPP

#include <optional>
#include <utility>
#include <vector>

#include "demailly/gmres.hpp"
#include "demailly/system.hpp"

namespace demailly {

enum class NewtonStatus { Converged, MaxIterExceeded, LineSearchStall, NonPositiveStart };

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 30;
    GmresOptions gmres;
};

struct NewtonResult {
    NewtonStatus status = NewtonStatus::Converged;
    MetricState state;  // best state seen
    double norm = 0.0;  // its residual norm
    int iters = 0;
};

/// Damped Newton with backtracking line search; steps are accepted only when
/// the residual decreases and M stays positive definite. Updates are
/// traceless, so tr H = 0 is preserved.
NewtonResult newton_solve(const MetricState& state0, const SystemParams& params, double t,
                          const NewtonOptions& opt);

/// Solves the cushioned equation  [c0 + D(exp H, A)]_herm,tf + H = 0 for the
/// t = 0 reference state (Newton with a pseudo-time fallback). Throws
/// NoConvergence when the budget is exhausted.
HermitianMatrixField solve_cushioned(const HermitianMatrixField& c0, const ConnectionData& A,
                                     double tol,
                                     const HermitianMatrixField* init = nullptr);

/// Builds the t = 0 scenario: H0 from the cushioned solve, then
///   alpha = max(0, -min_grid min-eig(beta/r Id - H0)) + margin,
///   a0    = det((beta/r + alpha) Id - H0) pointwise,
/// so that (f = 0, H0) solves the system at t = 0 exactly.
std::pair<SystemParams, MetricState> setup_t0(const ScalarField& beta,
                                              const HermitianMatrixField& c0,
                                              const ConnectionData& A, double margin,
                                              double lambda_exp);

/// Decoupled scalar route for diagonal data (A = 0): Newton on
/// (f, u_1..u_{r-1}) with u_r = -sum u_i, solving
///   prod_i(beta/r + Delta f - e^f u_i + (1-t) alpha) = e^{lambda f} a0,
///   c_i - Delta u_i + e^f u_i = 0.
/// Fully independent of the matrix-field machinery; serves as its oracle.
struct DirectSumResult {
    NewtonStatus status = NewtonStatus::Converged;
    ScalarField f;
    std::vector<ScalarField> u; // all r of them, sum = 0
    double norm = 0.0;
    int iters = 0;
};
DirectSumResult solve_direct_sum(const std::vector<ScalarField>& beta_i, double alpha,
                                 double lambda_exp, const ScalarField& a0, double t,
                                 const NewtonOptions& opt,
                                 const ScalarField* f_init = nullptr,
                                 const std::vector<ScalarField>* u_init = nullptr);

} // namespace demailly

#endif
