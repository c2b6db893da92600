#ifndef DEMAILLY_SPECTRAL_HPP
#define DEMAILLY_SPECTRAL_HPP

#include <cstdint>

#include "demailly/grid.hpp"

namespace demailly {

enum class DerivMode { Holo, Antiholo };

// Conventions, fixed once for the whole project:
//   z = x + iy,  d = (d_x - i d_y)/2,  dbar = (d_x + i d_y)/2,
//   Delta = (1/2)(d_xx + d_yy) = 2 d dbar,
//   omega_0 = dx^dy (unit volume), so the mean equals the integral.
// All derivative operators are Fourier-spectral; the Nyquist mode is dropped
// from first derivatives so they stay skew on real data.

/// d or dbar of a scalar field; exact on resolved modes |k| < n/2.
ComplexCoefficientField derivative(const ScalarField& u, DerivMode mode);
ComplexCoefficientField derivative(const ComplexCoefficientField& u, DerivMode mode);

/// Delta u = (1/2)(u_xx + u_yy); the result has zero mean.
ScalarField laplacian(const ScalarField& u);

/// Second-order 5-point stencil Laplacian. Used by the diagnostics that
/// evaluate differential inequalities on merely-continuous fields, where the
/// compact stencil keeps kink artifacts local instead of spreading them
/// across the grid like a Fourier derivative would.
ScalarField fd_laplacian(const ScalarField& u);

/// Integral against omega_0 (= arithmetic average, Vol = 1).
double mean(const ScalarField& u);

/// Solves Delta u = rho - mean(rho) with mean(u) = 0.
ScalarField poisson_solve(const ScalarField& rho);

/// osc u = max u - min u.
double oscillation(const ScalarField& u);

/// Raw 2D complex transforms (shared with the matrix-field operators).
void fft2(const GridSpec& g, const cplx* in, cplx* out, int sign);
/// Multiply the spectrum of `data` in place by the symbol of d, dbar or Delta.
void apply_symbol(const GridSpec& g, cplx* data, DerivMode mode);
void apply_laplacian_symbol(const GridSpec& g, cplx* data);

/// Constants of the discrete Green function of Delta on the torus:
/// sup = max of the Green field, l1 = mean |Green field|. Cached per n.
struct GreenConstants {
    double sup;
    double l1;
};
GreenConstants green_constants(GridSpec g);

/// Deterministic band-limited real field: modes 0 < |k|_inf <= kmax drawn
/// from the seeded generator, zero mean, rescaled so max|u| = amplitude.
ScalarField band_limited_random(GridSpec g, std::uint64_t seed, int kmax, double amplitude);

} // namespace demailly

#endif
