#include "demailly/bundle_ops.hpp"
#include <utility>

#include <cmath>

#include "demailly/errors.hpp"
#include "demailly/parallel.hpp"

namespace demailly {

namespace {

void fix_phase(Eigen::MatrixXcd& u) {
    // Largest-modulus component of each column made real positive;
    // ties resolved toward the lowest index.
    for (int c = 0; c < u.cols(); ++c) {
        int arg = 0;
        double best = -1.0;
        for (int r = 0; r < u.rows(); ++r) {
            double m = std::abs(u(r, c));
            if (m > best + 1e-15) {
                best = m;
                arg = r;
            }
        }
        cplx pivot = u(arg, c);
        if (std::abs(pivot) > 0.0) u.col(c) *= std::conj(pivot) / std::abs(pivot);
    }
}

FormKind derivative_kind(FormKind in, DerivMode mode) {
    if (in == FormKind::DzCoeff && mode == DerivMode::Antiholo) return FormKind::Density;
    if (in == FormKind::DzbarCoeff && mode == DerivMode::Holo) return FormKind::Density;
    return in;
}

// Entrywise spectral derivative of a packed matrix field.
void derive_entries(const GridSpec& g, int rank, const std::vector<cplx>& in,
                    std::vector<cplx>& out, DerivMode mode) {
    const int np = g.size();
    const int rr = rank * rank;
    std::vector<cplx> line(np), hat(np);
    for (int e = 0; e < rr; ++e) {
        for (int p = 0; p < np; ++p) line[p] = in[static_cast<std::size_t>(p) * rr + e];
        fft2(g, line.data(), hat.data(), -1);
        apply_symbol(g, hat.data(), mode);
        fft2(g, hat.data(), line.data(), 1);
        for (int p = 0; p < np; ++p) out[static_cast<std::size_t>(p) * rr + e] = line[p];
    }
}

} // namespace

EigenField eig_sorted(const HermitianMatrixField& H) {
    EigenField out(H.grid, H.rank);
    const int r = H.rank;
    parallel_for(H.points(), [&](int begin, int end) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
        Eigen::MatrixXcd u(r, r);
        for (int p = begin; p < end; ++p) {
            es.compute(H.at(p));
            // Eigen returns ascending order; flip to descending.
            for (int i = 0; i < r; ++i) {
                out.lambda(p, i) = es.eigenvalues()(r - 1 - i);
                u.col(i) = es.eigenvectors().col(r - 1 - i);
            }
            fix_phase(u);
            out.u_at(p) = u;
        }
    });
    return out;
}

ScalarField lambda_max_field(const HermitianMatrixField& H) {
    ScalarField out(H.grid);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    for (int p = 0; p < H.points(); ++p) {
        es.compute(H.at(p), Eigen::EigenvaluesOnly);
        out.v[p] = es.eigenvalues()(H.rank - 1);
    }
    return out;
}

HermitianMatrixField exp_from_eig(const EigenField& eig, double scale) {
    const int r = eig.rank;
    HermitianMatrixField out(eig.grid, r);
    parallel_for(eig.grid.size(), [&](int begin, int end) {
        Eigen::VectorXcd d(r);
        for (int p = begin; p < end; ++p) {
            for (int i = 0; i < r; ++i) d(i) = std::exp(scale * eig.lambda(p, i));
            ConstMatMap u = eig.u_at(p);
            Eigen::MatrixXcd m = u * d.asDiagonal() * u.adjoint();
            out.at(p) = 0.5 * (m + m.adjoint());
        }
    });
    return out;
}

HermitianMatrixField exp_herm(const HermitianMatrixField& H) {
    return exp_from_eig(eig_sorted(H), 1.0);
}

HermitianMatrixField log_spd(const HermitianMatrixField& G) {
    EigenField eig = eig_sorted(G);
    const int r = G.rank;
    for (int p = 0; p < G.points(); ++p) {
        double mn = eig.lambda(p, r - 1);
        if (!(mn > 0.0))
            throw NotPositiveDefinite(p, mn,
                                      "log of a non-positive-definite matrix at grid point " +
                                          std::to_string(p));
    }
    HermitianMatrixField out(G.grid, r);
    Eigen::VectorXcd d(r);
    for (int p = 0; p < G.points(); ++p) {
        for (int i = 0; i < r; ++i) d(i) = std::log(eig.lambda(p, i));
        ConstMatMap u = std::as_const(eig).u_at(p);
        Eigen::MatrixXcd m = u * d.asDiagonal() * u.adjoint();
        out.at(p) = 0.5 * (m + m.adjoint());
    }
    return out;
}

MatrixFormField mat_derivative(const HermitianMatrixField& T, DerivMode mode) {
    FormKind k = mode == DerivMode::Holo ? FormKind::DzCoeff : FormKind::DzbarCoeff;
    MatrixFormField out(T.grid, T.rank, k);
    derive_entries(T.grid, T.rank, T.a, out.a, mode);
    return out;
}

MatrixFormField mat_derivative(const MatrixFormField& T, DerivMode mode) {
    MatrixFormField out(T.grid, T.rank, derivative_kind(T.kind, mode));
    derive_entries(T.grid, T.rank, T.a, out.a, mode);
    return out;
}

MatrixFormField covariant_d0(const HermitianMatrixField& T, const ConnectionData& A) {
    MatrixFormField out = mat_derivative(T, DerivMode::Holo);
    for (int p = 0; p < T.points(); ++p) {
        ConstMatMap a10 = A.a10.at(p);
        ConstMatMap t = T.at(p);
        out.at(p) += a10 * t - t * a10;
    }
    return out;
}

MatrixFormField dbar_end(const MatrixFormField& S, const ConnectionData& A) {
    MatrixFormField out = mat_derivative(S, DerivMode::Antiholo);
    out.kind = FormKind::Density;
    for (int p = 0; p < S.points(); ++p) {
        ConstMatMap a01 = A.a01.at(p);
        ConstMatMap s = S.at(p);
        out.at(p) += a01 * s - s * a01;
        out.at(p) *= -2.0;
    }
    return out;
}

MatrixFormField demailly_D(const EigenField& eig, const ConnectionData& A) {
    const int r = eig.rank;
    for (int p = 0; p < eig.grid.size(); ++p) {
        if (!std::isfinite(std::exp(eig.lambda(p, 0))))
            throw NotPositiveDefinite(p, eig.lambda(p, 0),
                                      "exp(H) overflowed at grid point " + std::to_string(p));
    }
    HermitianMatrixField g = exp_from_eig(eig, 1.0);
    HermitianMatrixField ginv = exp_from_eig(eig, -1.0);
    MatrixFormField d0g = mat_derivative(g, DerivMode::Holo);
    MatrixFormField s(eig.grid, r, FormKind::DzCoeff);
    for (int p = 0; p < eig.grid.size(); ++p) {
        ConstMatMap a10 = A.a10.at(p);
        Eigen::MatrixXcd cov = d0g.at(p) + a10 * g.at(p) - g.at(p) * a10;
        s.at(p) = ginv.at(p) * cov;
    }
    return dbar_end(s, A);
}

MatrixFormField demailly_D(const HermitianMatrixField& H, const ConnectionData& A) {
    return demailly_D(eig_sorted(H), A);
}

HermitianMatrixField connection_curvature(const ConnectionData& A) {
    MatrixFormField da10 = mat_derivative(A.a10, DerivMode::Antiholo);
    MatrixFormField da01 = mat_derivative(A.a01, DerivMode::Holo);
    HermitianMatrixField out(A.grid(), A.rank());
    for (int p = 0; p < out.points(); ++p) {
        ConstMatMap a10 = A.a10.at(p);
        ConstMatMap a01 = A.a01.at(p);
        Eigen::MatrixXcd f = -2.0 * da10.at(p) + 2.0 * da01.at(p) +
                             2.0 * (a10 * a01 - a01 * a10);
        out.at(p) = 0.5 * (f + f.adjoint());
    }
    return out;
}

HermitianMatrixField herm_part(const MatrixFormField& X) {
    HermitianMatrixField out(X.grid, X.rank);
    for (int p = 0; p < X.points(); ++p) {
        ConstMatMap x = X.at(p);
        out.at(p) = 0.5 * (x + x.adjoint());
    }
    return out;
}

void make_traceless(HermitianMatrixField& X) {
    const double r = X.rank;
    for (int p = 0; p < X.points(); ++p) {
        MatMap m = X.at(p);
        m -= (m.trace() / r) * Eigen::MatrixXcd::Identity(X.rank, X.rank);
    }
}

EigenframeConnection eigenframe_connection(const HermitianMatrixField& H, const ConnectionData& A,
                                           double gap_floor) {
    EigenframeConnection out;
    out.eig = eig_sorted(H);
    out.grid = H.grid;
    out.rank = H.rank;
    const int r = H.rank;
    out.C.assign(static_cast<std::size_t>(H.points()) * r * r, 0.0);
    out.mask.assign(H.points(), 0);

    MatrixFormField dHz = mat_derivative(H, DerivMode::Holo);
    MatrixFormField dHzb = mat_derivative(H, DerivMode::Antiholo);

    for (int p = 0; p < H.points(); ++p) {
        ConstMatMap u = std::as_const(out.eig).u_at(p);
        Eigen::MatrixXcd wz = u.adjoint() * dHz.at(p) * u;
        Eigen::MatrixXcd wzb = u.adjoint() * dHzb.at(p) * u;
        Eigen::MatrixXcd a01 = u.adjoint() * A.a01.at(p) * u;
        Eigen::MatrixXcd a10 = u.adjoint() * A.a10.at(p) * u;
        // Frame-derivative term from first-order perturbation theory;
        // the diagonal is pure phase gauge and never enters C.
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j) {
                if (i == j) continue;
                double den = out.eig.lambda(p, j) - out.eig.lambda(p, i);
                if (std::abs(den) > 1e-12) {
                    a01(i, j) += wzb(i, j) / den;
                    a10(i, j) += wz(i, j) / den;
                }
            }
        }
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j) {
                if (i == j) continue;
                // C_{i,j} = -Lambda sqrt(-1)(A10^j_i wedge A01^i_j) = -2 Re(...)
                out.C[(static_cast<std::size_t>(p) * r + i) * r + j] =
                    -2.0 * (a10(j, i) * a01(i, j)).real();
            }
        }
        out.mask[p] = out.eig.gap(p) >= gap_floor ? 1 : 0;
    }
    return out;
}

} // namespace demailly
