#include "demailly/system.hpp"

#include <cmath>
#include <utility>

#include "demailly/errors.hpp"

namespace demailly {

namespace {

ScalarField exp_field(const ScalarField& f) {
    ScalarField out(f.grid);
    for (int p = 0; p < f.size(); ++p) out.v[p] = std::exp(f.v[p]);
    return out;
}

// Cholesky-based log det; returns false when not positive definite.
bool logdet_spd(const Eigen::MatrixXcd& m, double& out) {
    Eigen::LLT<Eigen::MatrixXcd> llt(m);
    if (llt.info() != Eigen::Success) return false;
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        double d = llt.matrixL()(i, i).real();
        if (!(d > 0.0)) return false;
        s += std::log(d);
    }
    out = 2.0 * s;
    return true;
}

double min_eigenvalue(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

} // namespace

double residual_norm(const ScalarField& r1, const HermitianMatrixField& r2) {
    double s1 = 0.0;
    for (int p = 0; p < r1.size(); ++p) s1 += r1.v[p] * r1.v[p];
    double s2 = 0.0;
    for (int p = 0; p < r2.points(); ++p) s2 += r2.at(p).squaredNorm();
    const double np = r1.size();
    return std::sqrt(s1 / np + s2 / np);
}

HermitianMatrixField assemble_M(const MetricState& state, const SystemParams& params, double t) {
    const GridSpec g = state.f.grid;
    const int r = params.rank;
    ScalarField lf = laplacian(state.f);
    ScalarField ef = exp_field(state.f);
    HermitianMatrixField out(g, r);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);
    for (int p = 0; p < g.size(); ++p) {
        double s = params.beta.v[p] / r + lf.v[p] + (1.0 - t) * params.alpha;
        out.at(p) = s * id - ef.v[p] * state.H.at(p);
    }
    return out;
}

Residual residual(const MetricState& state, const SystemParams& params, double t) {
    const GridSpec g = state.f.grid;
    HermitianMatrixField m = assemble_M(state, params, t);
    Residual res;
    res.r1 = ScalarField(g);
    for (int p = 0; p < g.size(); ++p) {
        double ld;
        if (!logdet_spd(m.at(p), ld)) throw NonPositiveM(p, min_eigenvalue(m.at(p)));
        res.r1.v[p] = ld - params.lambda_exp * state.f.v[p] - std::log(params.a0.v[p]);
    }
    MatrixFormField d = demailly_D(state.H, params.A);
    ScalarField ef = exp_field(state.f);
    res.r2 = HermitianMatrixField(g, params.rank);
    for (int p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd x = params.c0.at(p) + d.at(p);
        res.r2.at(p) = 0.5 * (x + x.adjoint()) + ef.v[p] * state.H.at(p);
    }
    make_traceless(res.r2);
    res.norm = residual_norm(res.r1, res.r2);
    return res;
}

DemaillyDLinearization::DemaillyDLinearization(EigenField eig, const ConnectionData* A)
    : eig_(std::move(eig)), A_(A) {
    const int r = eig_.rank;
    g_ = exp_from_eig(eig_, 1.0);
    ginv_ = exp_from_eig(eig_, -1.0);
    MatrixFormField d0g = covariant_d0(g_, *A_);
    s_ = MatrixFormField(eig_.grid, r, FormKind::DzCoeff);
    for (int p = 0; p < eig_.grid.size(); ++p) s_.at(p) = ginv_.at(p) * d0g.at(p);
    // Divided differences of exp over eigenvalue pairs.
    phi_.assign(static_cast<std::size_t>(eig_.grid.size()) * r * r, 0.0);
    for (int p = 0; p < eig_.grid.size(); ++p) {
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j) {
                double li = eig_.lambda(p, i), lj = eig_.lambda(p, j);
                double d = li - lj;
                phi_[(static_cast<std::size_t>(p) * r + i) * r + j] =
                    std::abs(d) < 1e-12 ? std::exp(li) : (std::exp(li) - std::exp(lj)) / d;
            }
        }
    }
}

HermitianMatrixField DemaillyDLinearization::dexp(const HermitianMatrixField& dH) const {
    const int r = eig_.rank;
    HermitianMatrixField dg(eig_.grid, r);
    for (int p = 0; p < eig_.grid.size(); ++p) {
        ConstMatMap u = std::as_const(eig_).u_at(p);
        Eigen::MatrixXcd w = u.adjoint() * dH.at(p) * u;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
                w(i, j) *= phi_[(static_cast<std::size_t>(p) * r + i) * r + j];
        dg.at(p) = u * w * u.adjoint();
    }
    return dg;
}

MatrixFormField DemaillyDLinearization::apply(const HermitianMatrixField& dH) const {
    // delta S = g^{-1} (d0(dg) - dg S);  delta D = dbar_end(delta S).
    HermitianMatrixField dg = dexp(dH);
    MatrixFormField d0dg = covariant_d0(dg, *A_);
    MatrixFormField ds(eig_.grid, eig_.rank, FormKind::DzCoeff);
    for (int p = 0; p < eig_.grid.size(); ++p)
        ds.at(p) = ginv_.at(p) * (d0dg.at(p) - dg.at(p) * s_.at(p));
    return dbar_end(ds, *A_);
}

LinearizationPoint::LinearizationPoint(const MetricState& state, const SystemParams& params,
                                       double t)
    : state_(state), params_(&params), t_(t), expf_(exp_field(state.f)),
      dlin_(eig_sorted(state.H), &params.A) {
    const GridSpec g = state.f.grid;
    const int r = params.rank;
    m_ = assemble_M(state, params, t);
    minv_ = HermitianMatrixField(g, r);
    base_.r1 = ScalarField(g);
    double acc_tr = 0.0, acc_ef = 0.0;
    for (int p = 0; p < g.size(); ++p) {
        double ld;
        if (!logdet_spd(m_.at(p), ld)) throw NonPositiveM(p, min_eigenvalue(m_.at(p)));
        base_.r1.v[p] = ld - params.lambda_exp * state.f.v[p] - std::log(params.a0.v[p]);
        minv_.at(p) = m_.at(p).inverse();
        acc_tr += minv_.at(p).trace().real();
        acc_ef += expf_.v[p];
    }
    mean_tr_minv_ = acc_tr / g.size();
    mean_expf_ = acc_ef / g.size();

    MatrixFormField d = demailly_D(dlin_.eig(), params.A);
    base_.r2 = HermitianMatrixField(g, r);
    for (int p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd x = params.c0.at(p) + d.at(p);
        base_.r2.at(p) = 0.5 * (x + x.adjoint()) + expf_.v[p] * state.H.at(p);
    }
    make_traceless(base_.r2);
    base_.norm = residual_norm(base_.r1, base_.r2);
}

Residual LinearizationPoint::apply(const StateDelta& delta) const {
    const GridSpec g = state_.f.grid;
    const int r = params_->rank;
    ScalarField ldf = laplacian(delta.df);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);

    Residual out;
    out.r1 = ScalarField(g);
    out.r2 = HermitianMatrixField(g, r);

    MatrixFormField dD = dlin_.apply(delta.dH);
    for (int p = 0; p < g.size(); ++p) {
        // e^f (df H + dH) enters both blocks.
        Eigen::MatrixXcd eterm = expf_.v[p] * (delta.df.v[p] * state_.H.at(p) + delta.dH.at(p));
        Eigen::MatrixXcd dM = ldf.v[p] * id - eterm;
        out.r1.v[p] = (minv_.at(p) * dM).trace().real() - params_->lambda_exp * delta.df.v[p];
        Eigen::MatrixXcd x = dD.at(p);
        out.r2.at(p) = 0.5 * (x + x.adjoint()) + eterm;
    }
    make_traceless(out.r2);
    out.norm = residual_norm(out.r1, out.r2);
    return out;
}

Residual apply_linearization(const MetricState& state, const SystemParams& params, double t,
                             const StateDelta& delta) {
    return LinearizationPoint(state, params, t).apply(delta);
}

} // namespace demailly
