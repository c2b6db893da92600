#include "demailly/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>

namespace demailly {

namespace {

// One pair of c2c plans per grid size. Plans are created with
// FFTW_ESTIMATE | FFTW_UNALIGNED so fftw_execute_dft may run on any buffer;
// ESTIMATE keeps planning deterministic.
struct PlanSet {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    explicit PlanSet(int n) {
        std::vector<cplx> scratch_in(static_cast<size_t>(n) * n);
        std::vector<cplx> scratch_out(scratch_in.size());
        auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
        auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd = fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, flags);
        bwd = fftw_plan_dft_2d(n, n, in, out, FFTW_BACKWARD, flags);
    }
    ~PlanSet() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    PlanSet(const PlanSet&) = delete;
    PlanSet& operator=(const PlanSet&) = delete;
};

PlanSet& plans_for(int n) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<PlanSet>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<PlanSet>(n)).first;
    return *it->second;
}

// Signed wavenumber of mode index j; the Nyquist mode maps to +n/2.
inline int wavenumber(int j, int n) { return j <= n / 2 ? j : j - n; }

// Wavenumber for first derivatives: Nyquist is dropped.
inline int deriv_wavenumber(int j, int n) { return j == n / 2 ? 0 : wavenumber(j, n); }

FormKind derived_kind(FormKind in, DerivMode mode) {
    if (in == FormKind::DzCoeff && mode == DerivMode::Antiholo) return FormKind::Density;
    if (in == FormKind::DzbarCoeff && mode == DerivMode::Holo) return FormKind::Density;
    if (in == FormKind::Density) return FormKind::Density;
    return in; // degenerate combinations keep the plain coefficient derivative
}

} // namespace

void fft2(const GridSpec& g, const cplx* in, cplx* out, int sign) {
    PlanSet& ps = plans_for(g.n);
    auto* fin = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in));
    auto* fout = reinterpret_cast<fftw_complex*>(out);
    fftw_execute_dft(sign == FFTW_FORWARD ? ps.fwd : ps.bwd, fin, fout);
}

void apply_symbol(const GridSpec& g, cplx* data, DerivMode mode) {
    const int n = g.n;
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int jx = 0; jx < n; ++jx) {
        const double kx = deriv_wavenumber(jx, n);
        for (int jy = 0; jy < n; ++jy) {
            const double ky = deriv_wavenumber(jy, n);
            // d   -> pi*(i*kx + ky),  dbar -> pi*(i*kx - ky)
            cplx sym = mode == DerivMode::Holo ? cplx(M_PI * ky, M_PI * kx)
                                               : cplx(-M_PI * ky, M_PI * kx);
            data[g.index(jx, jy)] *= sym * norm;
        }
    }
}

void apply_laplacian_symbol(const GridSpec& g, cplx* data) {
    const int n = g.n;
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int jx = 0; jx < n; ++jx) {
        const double kx = wavenumber(jx, n);
        for (int jy = 0; jy < n; ++jy) {
            const double ky = wavenumber(jy, n);
            data[g.index(jx, jy)] *= -2.0 * M_PI * M_PI * (kx * kx + ky * ky) * norm;
        }
    }
}

namespace {

ComplexCoefficientField spectral_apply(const GridSpec& g, const cplx* in, DerivMode mode,
                                       FormKind out_kind) {
    ComplexCoefficientField out(g, out_kind);
    std::vector<cplx> hat(g.size());
    fft2(g, in, hat.data(), FFTW_FORWARD);
    apply_symbol(g, hat.data(), mode);
    fft2(g, hat.data(), out.v.data(), FFTW_BACKWARD);
    return out;
}

} // namespace

ComplexCoefficientField derivative(const ScalarField& u, DerivMode mode) {
    std::vector<cplx> tmp(u.size());
    for (int p = 0; p < u.size(); ++p) tmp[p] = u.v[p];
    FormKind k = mode == DerivMode::Holo ? FormKind::DzCoeff : FormKind::DzbarCoeff;
    return spectral_apply(u.grid, tmp.data(), mode, k);
}

ComplexCoefficientField derivative(const ComplexCoefficientField& u, DerivMode mode) {
    return spectral_apply(u.grid, u.v.data(), mode, derived_kind(u.kind, mode));
}

ScalarField laplacian(const ScalarField& u) {
    std::vector<cplx> hat(u.size());
    for (int p = 0; p < u.size(); ++p) hat[p] = u.v[p];
    std::vector<cplx> work(u.size());
    fft2(u.grid, hat.data(), work.data(), FFTW_FORWARD);
    apply_laplacian_symbol(u.grid, work.data());
    fft2(u.grid, work.data(), hat.data(), FFTW_BACKWARD);
    ScalarField out(u.grid);
    for (int p = 0; p < u.size(); ++p) out.v[p] = hat[p].real();
    return out;
}

ScalarField fd_laplacian(const ScalarField& u) {
    const int n = u.grid.n;
    const double h2 = 1.0 / (static_cast<double>(n) * n); // h = 1/n
    ScalarField out(u.grid);
    for (int jx = 0; jx < n; ++jx) {
        const int xp = (jx + 1) % n, xm = (jx + n - 1) % n;
        for (int jy = 0; jy < n; ++jy) {
            const int yp = (jy + 1) % n, ym = (jy + n - 1) % n;
            out.at(jx, jy) = 0.5 *
                             (u.at(xp, jy) + u.at(xm, jy) + u.at(jx, yp) + u.at(jx, ym) -
                              4.0 * u.at(jx, jy)) /
                             h2;
        }
    }
    return out;
}

double mean(const ScalarField& u) {
    double s = 0.0;
    for (int p = 0; p < u.size(); ++p) s += u.v[p];
    return s / u.size();
}

ScalarField poisson_solve(const ScalarField& rho) {
    const GridSpec g = rho.grid;
    const int n = g.n;
    std::vector<cplx> hat(g.size());
    for (int p = 0; p < g.size(); ++p) hat[p] = rho.v[p];
    std::vector<cplx> work(g.size());
    fft2(g, hat.data(), work.data(), FFTW_FORWARD);
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int jx = 0; jx < n; ++jx) {
        const double kx = wavenumber(jx, n);
        for (int jy = 0; jy < n; ++jy) {
            const double ky = wavenumber(jy, n);
            const double sym = -2.0 * M_PI * M_PI * (kx * kx + ky * ky);
            const int p = g.index(jx, jy);
            work[p] = sym == 0.0 ? cplx(0.0) : work[p] * norm / sym;
        }
    }
    fft2(g, work.data(), hat.data(), FFTW_BACKWARD);
    ScalarField out(g);
    for (int p = 0; p < g.size(); ++p) out.v[p] = hat[p].real();
    return out;
}

double oscillation(const ScalarField& u) {
    double lo = u.v[0], hi = u.v[0];
    for (int p = 1; p < u.size(); ++p) {
        lo = std::min(lo, u.v[p]);
        hi = std::max(hi, u.v[p]);
    }
    return hi - lo;
}

GreenConstants green_constants(GridSpec g) {
    static std::mutex mtx;
    static std::map<int, GreenConstants> cache;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(g.n);
        if (it != cache.end()) return it->second;
    }
    // Discrete Green field: Delta G = n^2 * delta_0 - 1, mean G = 0.
    ScalarField delta(g);
    delta.v[0] = static_cast<double>(g.size());
    ScalarField green = poisson_solve(delta);
    GreenConstants c{};
    c.sup = green.v[0];
    double acc = 0.0;
    for (int p = 0; p < g.size(); ++p) {
        c.sup = std::max(c.sup, green.v[p]);
        acc += std::abs(green.v[p]);
    }
    c.l1 = acc / g.size();
    std::lock_guard<std::mutex> lock(mtx);
    cache[g.n] = c;
    return c;
}

ScalarField band_limited_random(GridSpec g, std::uint64_t seed, int kmax, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    // Coefficients are scaled by their l1 norm, so sup|u| <= amplitude and the
    // continuum field is independent of the grid resolution.
    std::vector<double> coef;
    double l1 = 0.0;
    for (int kx = -kmax; kx <= kmax; ++kx) {
        for (int ky = -kmax; ky <= kmax; ++ky) {
            if (kx == 0 && ky == 0) continue;
            double a = unif(rng), b = unif(rng);
            coef.push_back(a);
            coef.push_back(b);
            l1 += std::abs(a) + std::abs(b);
        }
    }
    const double scale = l1 > 0.0 ? amplitude / l1 : 0.0;
    ScalarField u(g);
    std::size_t c = 0;
    for (int kx = -kmax; kx <= kmax; ++kx) {
        for (int ky = -kmax; ky <= kmax; ++ky) {
            if (kx == 0 && ky == 0) continue;
            const double a = scale * coef[c], b = scale * coef[c + 1];
            c += 2;
            for (int jx = 0; jx < g.n; ++jx) {
                for (int jy = 0; jy < g.n; ++jy) {
                    const double phase = 2.0 * M_PI * (kx * g.x(jx) + ky * g.y(jy));
                    u.at(jx, jy) += a * std::cos(phase) + b * std::sin(phase);
                }
            }
        }
    }
    return u;
}

} // namespace demailly
