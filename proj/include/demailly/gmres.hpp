#ifndef DEMAILLY_GMRES_HPP
#define DEMAILLY_GMRES_HPP

#include <functional>
#include <vector>

namespace demailly {

using VecFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;

struct GmresOptions {
    int restart = 80;
    int max_iters = 400;
    double rel_tol = 1e-8;
};

struct GmresResult {
    bool converged = false;
    int iters = 0;
    double rel_residual = 0.0;
};

/// Left-preconditioned restarted GMRES for A x = b, matrix-free. All inner
/// products run in a fixed order, so results are bit-reproducible.
GmresResult gmres(const VecFn& apply_A, const VecFn& apply_precond, const std::vector<double>& b,
                  std::vector<double>& x, const GmresOptions& opt);

} // namespace demailly

#endif
