#include "demailly/solvers.hpp"

#include <cmath>
#include <limits>

#include "demailly/errors.hpp"

namespace demailly {

namespace {

constexpr double kMinLineStep = 9.5367431640625e-07; // 2^-20
constexpr double kArmijo = 1e-4;

// Packed layout: [f values | per point r*r complex H entries as (re, im)].
struct Packing {
    GridSpec grid;
    int rank = 0;
    std::size_t size() const {
        return static_cast<std::size_t>(grid.size()) * (1 + 2 * rank * rank);
    }
    void pack(const ScalarField& f, const HermitianMatrixField& h, std::vector<double>& out) const {
        out.resize(size());
        const int np = grid.size();
        for (int p = 0; p < np; ++p) out[p] = f.v[p];
        const std::size_t rr = static_cast<std::size_t>(rank) * rank;
        for (std::size_t e = 0; e < static_cast<std::size_t>(np) * rr; ++e) {
            out[np + 2 * e] = h.a[e].real();
            out[np + 2 * e + 1] = h.a[e].imag();
        }
    }
    void unpack(const std::vector<double>& in, ScalarField& f, HermitianMatrixField& h) const {
        const int np = grid.size();
        f = ScalarField(grid);
        h = HermitianMatrixField(grid, rank);
        for (int p = 0; p < np; ++p) f.v[p] = in[p];
        const std::size_t rr = static_cast<std::size_t>(rank) * rank;
        for (std::size_t e = 0; e < static_cast<std::size_t>(np) * rr; ++e)
            h.a[e] = cplx(in[np + 2 * e], in[np + 2 * e + 1]);
    }
};

// In-place spectral solve of (a Delta + c) u = rhs on a complex buffer.
void helmholtz_inverse(const GridSpec& g, cplx* data, double a, double c) {
    std::vector<cplx> hat(g.size());
    fft2(g, data, hat.data(), -1);
    const int n = g.n;
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int jx = 0; jx < n; ++jx) {
        const double kx = jx <= n / 2 ? jx : jx - n;
        for (int jy = 0; jy < n; ++jy) {
            const double ky = jy <= n / 2 ? jy : jy - n;
            const double sym = -2.0 * M_PI * M_PI * (kx * kx + ky * ky);
            hat[g.index(jx, jy)] *= norm / (a * sym + c);
        }
    }
    fft2(g, hat.data(), data, 1);
}

void helmholtz_inverse_real(const GridSpec& g, const double* in, double* out, double a, double c) {
    std::vector<cplx> buf(g.size());
    for (int p = 0; p < g.size(); ++p) buf[p] = in[p];
    helmholtz_inverse(g, buf.data(), a, c);
    for (int p = 0; p < g.size(); ++p) out[p] = buf[p].real();
}

// Block preconditioner on a packed vector: the f block gets
// (a1 Delta - lambda)^{-1}, each H entry gets (-Delta + c2)^{-1}.
void apply_block_precond(const Packing& pk, double a1, double lambda, double c2,
                         const std::vector<double>& in, std::vector<double>& out) {
    out.resize(in.size());
    const GridSpec g = pk.grid;
    const int np = g.size();
    helmholtz_inverse_real(g, in.data(), out.data(), a1, -lambda);
    const int rr = pk.rank * pk.rank;
    std::vector<cplx> buf(np);
    for (int e = 0; e < rr; ++e) {
        for (int p = 0; p < np; ++p) {
            const std::size_t base = np + 2 * (static_cast<std::size_t>(p) * rr + e);
            buf[p] = cplx(in[base], in[base + 1]);
        }
        helmholtz_inverse(g, buf.data(), -1.0, c2);
        for (int p = 0; p < np; ++p) {
            const std::size_t base = np + 2 * (static_cast<std::size_t>(p) * rr + e);
            out[base] = buf[p].real();
            out[base + 1] = buf[p].imag();
        }
    }
}

void hermitize(HermitianMatrixField& h) {
    for (int p = 0; p < h.points(); ++p) {
        MatMap m = h.at(p);
        m = 0.5 * (m + m.adjoint()).eval();
    }
}

} // namespace

NewtonResult newton_solve(const MetricState& state0, const SystemParams& params, double t,
                          const NewtonOptions& opt) {
    NewtonResult result;
    result.state = state0;
    make_traceless(result.state.H);

    Packing pk{state0.f.grid, params.rank};
    std::vector<double> rhs, delta;

    std::optional<LinearizationPoint> lp;
    try {
        lp.emplace(result.state, params, t);
    } catch (const NonPositiveM&) {
        result.status = NewtonStatus::NonPositiveStart;
        result.norm = std::numeric_limits<double>::infinity();
        return result;
    }
    result.norm = lp->base().norm;

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        if (lp->base().norm <= opt.tol) {
            result.status = NewtonStatus::Converged;
            result.iters = iter;
            result.norm = lp->base().norm;
            return result;
        }

        pk.pack(lp->base().r1, lp->base().r2, rhs);
        for (double& x : rhs) x = -x;

        auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
            StateDelta d;
            pk.unpack(in, d.df, d.dH);
            Residual jr = lp->apply(d);
            pk.pack(jr.r1, jr.r2, out);
        };
        const double a1 = lp->mean_tr_minv();
        const double c2 = lp->mean_expf();
        auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
            apply_block_precond(pk, a1, params.lambda_exp, c2, in, out);
        };
        delta.assign(pk.size(), 0.0);
        gmres(apply, precond, rhs, delta, opt.gmres);

        StateDelta d;
        pk.unpack(delta, d.df, d.dH);
        hermitize(d.dH);
        make_traceless(d.dH);

        // Backtracking: accept on residual decrease with M > 0 preserved.
        double step = 1.0;
        const double cur = lp->base().norm;
        MetricState cand;
        bool accepted = false;
        while (step >= kMinLineStep) {
            cand.f = result.state.f;
            cand.H = result.state.H;
            ScalarField sdf = d.df;
            sdf *= step;
            cand.f += sdf;
            HermitianMatrixField sdH = d.dH;
            sdH *= step;
            cand.H += sdH;
            make_traceless(cand.H);
            try {
                LinearizationPoint lp_new(cand, params, t);
                const double new_norm = lp_new.base().norm;
                if (new_norm <= (1.0 - kArmijo * step) * cur) {
                    result.state = cand;
                    lp.emplace(std::move(lp_new));
                    result.norm = new_norm;
                    accepted = true;
                    break;
                }
            } catch (const NonPositiveM&) {
                // shrink
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.status = NewtonStatus::LineSearchStall;
            result.iters = iter + 1;
            return result;
        }
        result.iters = iter + 1;
    }
    if (lp->base().norm <= opt.tol) {
        result.status = NewtonStatus::Converged;
        result.norm = lp->base().norm;
        return result;
    }
    result.status = NewtonStatus::MaxIterExceeded;
    result.norm = lp->base().norm;
    return result;
}

namespace {

// Cushioned residual Phi(H) = [c0 + D]_herm,tf + H and its norm.
HermitianMatrixField cushion_residual(const HermitianMatrixField& h,
                                      const HermitianMatrixField& c0, const ConnectionData& A,
                                      double& norm_out) {
    MatrixFormField d = demailly_D(h, A);
    HermitianMatrixField phi(h.grid, h.rank);
    for (int p = 0; p < h.points(); ++p) {
        Eigen::MatrixXcd x = c0.at(p) + d.at(p);
        phi.at(p) = 0.5 * (x + x.adjoint()) + h.at(p);
    }
    make_traceless(phi);
    double s = 0.0;
    for (int p = 0; p < h.points(); ++p) s += phi.at(p).squaredNorm();
    norm_out = std::sqrt(s / h.points());
    return phi;
}

} // namespace

HermitianMatrixField solve_cushioned(const HermitianMatrixField& c0, const ConnectionData& A,
                                     double tol, const HermitianMatrixField* init) {
    const GridSpec g = c0.grid;
    const int r = c0.rank;
    HermitianMatrixField h = init ? *init : HermitianMatrixField(g, r);
    make_traceless(h);

    const int np = g.size();
    const std::size_t rr = static_cast<std::size_t>(r) * r;
    auto pack_h = [&](const HermitianMatrixField& x, std::vector<double>& out) {
        out.resize(2 * static_cast<std::size_t>(np) * rr);
        for (std::size_t e = 0; e < static_cast<std::size_t>(np) * rr; ++e) {
            out[2 * e] = x.a[e].real();
            out[2 * e + 1] = x.a[e].imag();
        }
    };
    auto unpack_h = [&](const std::vector<double>& in, HermitianMatrixField& x) {
        x = HermitianMatrixField(g, r);
        for (std::size_t e = 0; e < static_cast<std::size_t>(np) * rr; ++e)
            x.a[e] = cplx(in[2 * e], in[2 * e + 1]);
    };

    double norm;
    HermitianMatrixField phi = cushion_residual(h, c0, A, norm);
    double best = norm;

    GmresOptions gopt;
    gopt.rel_tol = 1e-8;

    for (int round = 0; round < 3; ++round) {
        // Newton phase.
        bool stalled = false;
        for (int iter = 0; iter < 40 && norm > tol; ++iter) {
            DemaillyDLinearization dlin(eig_sorted(h), &A);
            auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
                HermitianMatrixField dh;
                unpack_h(in, dh);
                MatrixFormField dd = dlin.apply(dh);
                HermitianMatrixField jr(g, r);
                for (int p = 0; p < np; ++p) {
                    Eigen::MatrixXcd x = dd.at(p);
                    jr.at(p) = 0.5 * (x + x.adjoint()) + dh.at(p);
                }
                make_traceless(jr);
                pack_h(jr, out);
            };
            auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
                out.resize(in.size());
                std::vector<cplx> buf(np);
                for (std::size_t e = 0; e < rr; ++e) {
                    for (int p = 0; p < np; ++p) {
                        const std::size_t base = 2 * (static_cast<std::size_t>(p) * rr + e);
                        buf[p] = cplx(in[base], in[base + 1]);
                    }
                    helmholtz_inverse(g, buf.data(), -1.0, 1.0);
                    for (int p = 0; p < np; ++p) {
                        const std::size_t base = 2 * (static_cast<std::size_t>(p) * rr + e);
                        out[base] = buf[p].real();
                        out[base + 1] = buf[p].imag();
                    }
                }
            };
            std::vector<double> rhs, delta;
            pack_h(phi, rhs);
            for (double& x : rhs) x = -x;
            delta.assign(rhs.size(), 0.0);
            gmres(apply, precond, rhs, delta, gopt);

            HermitianMatrixField dh;
            unpack_h(delta, dh);
            hermitize(dh);
            make_traceless(dh);

            double step = 1.0;
            bool accepted = false;
            while (step >= kMinLineStep) {
                HermitianMatrixField cand = h;
                HermitianMatrixField sdh = dh;
                sdh *= step;
                cand += sdh;
                make_traceless(cand);
                double cn;
                HermitianMatrixField cphi = cushion_residual(cand, c0, A, cn);
                if (cn <= (1.0 - kArmijo * step) * norm) {
                    h = cand;
                    phi = cphi;
                    norm = cn;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                stalled = true;
                break;
            }
        }
        best = std::min(best, norm);
        if (norm <= tol) return h;
        if (!stalled && round == 2) break;
        // Pseudo-time fallback: descend along -Phi before retrying Newton.
        for (int k = 0; k < 150 && norm > tol; ++k) {
            HermitianMatrixField stepf = phi;
            stepf *= -0.2;
            h += stepf;
            make_traceless(h);
            phi = cushion_residual(h, c0, A, norm);
        }
        best = std::min(best, norm);
        if (norm <= tol) return h;
    }
    throw NoConvergence(best);
}

std::pair<SystemParams, MetricState> setup_t0(const ScalarField& beta,
                                              const HermitianMatrixField& c0,
                                              const ConnectionData& A, double margin,
                                              double lambda_exp) {
    const GridSpec g = beta.grid;
    const int r = c0.rank;
    if (!(margin > 0.0)) throw ValidationError("margin", "> 0");
    HermitianMatrixField h0 = solve_cushioned(c0, A, 1e-11);

    double mu = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);
    for (int p = 0; p < g.size(); ++p) {
        es.compute((beta.v[p] / r) * id - h0.at(p), Eigen::EigenvaluesOnly);
        mu = std::min(mu, es.eigenvalues()(0));
    }
    const double alpha = std::max(0.0, -mu) + margin;

    ScalarField a0(g);
    for (int p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd m0 = (beta.v[p] / r + alpha) * id - h0.at(p);
        a0.v[p] = m0.determinant().real();
    }

    SystemParams params;
    params.rank = r;
    params.beta = beta;
    params.c0 = c0;
    params.A = A;
    params.alpha = alpha;
    params.lambda_exp = lambda_exp;
    params.a0 = a0;

    MetricState state;
    state.f = ScalarField(g);
    state.H = h0;
    return {std::move(params), std::move(state)};
}

namespace {

// Direct-sum residual on the unknown stack [f | u_1 .. u_{r-1}].
struct DirectSumSystem {
    GridSpec grid;
    int r;
    const std::vector<ScalarField>* beta_i;
    ScalarField beta_over_r; // beta / r
    std::vector<ScalarField> c; // c_i = beta_i - beta/r
    double alpha, lambda_exp, t;
    const ScalarField* a0;

    int np() const { return grid.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(np()) * r; } // f plus r-1 u's

    void split(const std::vector<double>& x, ScalarField& f, std::vector<ScalarField>& u) const {
        f = ScalarField(grid);
        for (int p = 0; p < np(); ++p) f.v[p] = x[p];
        u.assign(r, ScalarField(grid));
        for (int i = 0; i + 1 < r; ++i)
            for (int p = 0; p < np(); ++p) u[i].v[p] = x[static_cast<std::size_t>(np()) * (i + 1) + p];
        for (int i = 0; i + 1 < r; ++i)
            for (int p = 0; p < np(); ++p) u[r - 1].v[p] -= u[i].v[p];
    }

    // Returns false when some first-equation factor is nonpositive.
    bool eval(const std::vector<double>& x, std::vector<double>& res, double& norm) const {
        ScalarField f;
        std::vector<ScalarField> u;
        split(x, f, u);
        ScalarField lf = laplacian(f);
        std::vector<ScalarField> lu(r - 1, ScalarField(grid));
        for (int i = 0; i + 1 < r; ++i) lu[i] = laplacian(u[i]);

        res.assign(dim(), 0.0);
        for (int p = 0; p < np(); ++p) {
            const double ef = std::exp(f.v[p]);
            const double s = beta_over_r.v[p] + lf.v[p] + (1.0 - t) * alpha;
            double sum_log = 0.0;
            for (int i = 0; i < r; ++i) {
                const double fac = s - ef * u[i].v[p];
                if (!(fac > 0.0)) return false;
                sum_log += std::log(fac);
            }
            res[p] = sum_log - lambda_exp * f.v[p] - std::log(a0->v[p]);
            for (int i = 0; i + 1 < r; ++i)
                res[static_cast<std::size_t>(np()) * (i + 1) + p] =
                    c[i].v[p] - lu[i].v[p] + ef * u[i].v[p];
        }
        double acc = 0.0;
        for (double v : res) acc += v * v;
        norm = std::sqrt(acc / np());
        return true;
    }

    void apply_jacobian(const std::vector<double>& x, const std::vector<double>& dx,
                        std::vector<double>& out) const {
        ScalarField f, df;
        std::vector<ScalarField> u, du;
        split(x, f, u);
        split(dx, df, du);
        ScalarField lf = laplacian(f), ldf = laplacian(df);
        std::vector<ScalarField> ldu(r - 1, ScalarField(grid));
        for (int i = 0; i + 1 < r; ++i) ldu[i] = laplacian(du[i]);

        out.assign(dim(), 0.0);
        for (int p = 0; p < np(); ++p) {
            const double ef = std::exp(f.v[p]);
            const double s = beta_over_r.v[p] + lf.v[p] + (1.0 - t) * alpha;
            double acc = 0.0;
            for (int i = 0; i < r; ++i) {
                const double fac = s - ef * u[i].v[p];
                const double dfac =
                    ldf.v[p] - ef * (df.v[p] * u[i].v[p] + du[i].v[p]);
                acc += dfac / fac;
            }
            out[p] = acc - lambda_exp * df.v[p];
            for (int i = 0; i + 1 < r; ++i)
                out[static_cast<std::size_t>(np()) * (i + 1) + p] =
                    -ldu[i].v[p] + ef * (df.v[p] * u[i].v[p] + du[i].v[p]);
        }
    }
};

} // namespace

DirectSumResult solve_direct_sum(const std::vector<ScalarField>& beta_i, double alpha,
                                 double lambda_exp, const ScalarField& a0, double t,
                                 const NewtonOptions& opt, const ScalarField* f_init,
                                 const std::vector<ScalarField>* u_init) {
    DirectSumSystem sys;
    sys.grid = a0.grid;
    sys.r = static_cast<int>(beta_i.size());
    sys.beta_i = &beta_i;
    sys.alpha = alpha;
    sys.lambda_exp = lambda_exp;
    sys.t = t;
    sys.a0 = &a0;
    sys.beta_over_r = ScalarField(sys.grid);
    for (const ScalarField& b : beta_i) sys.beta_over_r += b;
    sys.beta_over_r *= 1.0 / sys.r;
    sys.c.assign(sys.r, ScalarField(sys.grid));
    for (int i = 0; i < sys.r; ++i) sys.c[i] = beta_i[i] - sys.beta_over_r;

    const int np = sys.np();
    std::vector<double> x(sys.dim(), 0.0);
    if (f_init)
        for (int p = 0; p < np; ++p) x[p] = f_init->v[p];
    if (u_init)
        for (int i = 0; i + 1 < sys.r; ++i)
            for (int p = 0; p < np; ++p)
                x[static_cast<std::size_t>(np) * (i + 1) + p] = (*u_init)[i].v[p];

    DirectSumResult result;
    auto finalize = [&](NewtonStatus st, double norm, int iters) {
        result.status = st;
        result.norm = norm;
        result.iters = iters;
        sys.split(x, result.f, result.u);
        return result;
    };

    std::vector<double> res;
    double norm;
    if (!sys.eval(x, res, norm))
        return finalize(NewtonStatus::NonPositiveStart, std::numeric_limits<double>::infinity(), 0);

    GmresOptions gopt = opt.gmres;
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        if (norm <= opt.tol) return finalize(NewtonStatus::Converged, norm, iter);

        std::vector<double> rhs = res;
        for (double& v : rhs) v = -v;
        // Constant-coefficient preconditioner data at the current iterate.
        double a1 = 0.0, c2 = 0.0;
        {
            ScalarField f;
            std::vector<ScalarField> u;
            sys.split(x, f, u);
            ScalarField lf = laplacian(f);
            for (int p = 0; p < np; ++p) {
                const double ef = std::exp(f.v[p]);
                const double s = sys.beta_over_r.v[p] + lf.v[p] + (1.0 - t) * alpha;
                for (int i = 0; i < sys.r; ++i) a1 += 1.0 / (s - ef * u[i].v[p]);
                c2 += ef;
            }
            a1 /= np;
            c2 /= np;
        }
        auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
            sys.apply_jacobian(x, in, out);
        };
        auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
            out.resize(in.size());
            helmholtz_inverse_real(sys.grid, in.data(), out.data(), a1, -lambda_exp);
            for (int i = 0; i + 1 < sys.r; ++i) {
                const std::size_t off = static_cast<std::size_t>(np) * (i + 1);
                helmholtz_inverse_real(sys.grid, in.data() + off, out.data() + off, -1.0, c2);
            }
        };
        std::vector<double> delta(sys.dim(), 0.0);
        gmres(apply, precond, rhs, delta, gopt);

        double step = 1.0;
        bool accepted = false;
        std::vector<double> cand(sys.dim()), cres;
        double cnorm;
        while (step >= kMinLineStep) {
            for (std::size_t i = 0; i < x.size(); ++i) cand[i] = x[i] + step * delta[i];
            if (sys.eval(cand, cres, cnorm) && cnorm <= (1.0 - kArmijo * step) * norm) {
                x.swap(cand);
                res.swap(cres);
                norm = cnorm;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) return finalize(NewtonStatus::LineSearchStall, norm, iter + 1);
    }
    if (norm <= opt.tol) return finalize(NewtonStatus::Converged, norm, opt.max_iter);
    return finalize(NewtonStatus::MaxIterExceeded, norm, opt.max_iter);
}

} // namespace demailly
