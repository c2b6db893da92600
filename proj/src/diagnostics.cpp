#include "demailly/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "demailly/errors.hpp"

namespace demailly {

namespace {

double sup(const ScalarField& u) {
    double m = u.v[0];
    for (int p = 1; p < u.size(); ++p) m = std::max(m, u.v[p]);
    return m;
}
double inf(const ScalarField& u) {
    double m = u.v[0];
    for (int p = 1; p < u.size(); ++p) m = std::min(m, u.v[p]);
    return m;
}

} // namespace

EstimateConstants assemble_constants(const SystemParams& params) {
    const GridSpec g = params.beta.grid;
    const int r = params.rank;
    EstimateConstants c;
    GreenConstants green = green_constants(g);
    c.green_sup = green.sup;
    c.green_l1 = green.l1;
    c.b_l1 = mean(params.beta) / r + params.alpha;
    c.d1 = sup(params.beta) / r + params.alpha;

    double a_min = std::numeric_limits<double>::infinity();
    double csub = 0.0;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    for (int p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd f0 = (params.beta.v[p] / r) * id + params.c0.at(p);
        es.compute(f0, Eigen::EigenvaluesOnly);
        a_min = std::min(a_min, es.eigenvalues()(0));
        csub = std::max(csub, std::max(std::abs(es.eigenvalues()(0)),
                                       std::abs(es.eigenvalues()(r - 1))));
    }
    c.c_sub = csub;
    c.griffiths_positive = a_min > 0.0;

    // Max principle: at the maximum of f, det <= (tr/r)^r gives
    // e^{lambda f} a0 <= (beta/r + alpha)^r pointwise there.
    double fu = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < g.size(); ++p) {
        double num = std::pow(params.beta.v[p] / r + params.alpha, r);
        fu = std::max(fu, std::log(num / params.a0.v[p]) / params.lambda_exp);
    }
    c.f_up = fu;

    // Chain for sup e^f lambda_max, safety factor 2: mean bound from the
    // first equation, Green-controlled oscillation of f, and the
    // subharmonicity of lambda_max.
    c.c_star = 2.0 * (c.b_l1 + std::exp(c.f_up) * c.c_sub * c.green_sup) *
               std::exp(c.d1 * c.green_sup);

    double sup_a0 = sup(params.a0);
    double upper = c.c_star + std::pow(std::exp(params.lambda_exp * c.f_up) * sup_a0, 1.0 / r) -
                   inf(params.beta) / r;
    c.b_delta_f = std::max(c.d1, upper);

    if (c.griffiths_positive)
        c.gposi_floor = std::log(std::pow(a_min, r) / sup_a0) / params.lambda_exp;

    c.c_osc = 2.0 * c.green_l1 * (csub + (r > 1 ? (r - 1) * c.c_star : 0.0)) * 2.0;
    c.subharm_slack = 100.0 / (static_cast<double>(g.n) * g.n);
    return c;
}

DiagnosticsRecord record(const MetricState& state, const SystemParams& params,
                         const EstimateConstants& consts, double t, int newton_iters,
                         double residual_norm) {
    const GridSpec g = state.f.grid;
    DiagnosticsRecord rec;
    rec.t = t;
    rec.newton_iters = newton_iters;
    rec.residual_norm = residual_norm;
    rec.sup_f = sup(state.f);
    rec.inf_f = inf(state.f);
    rec.osc_f = rec.sup_f - rec.inf_f;
    rec.deg_E = params.deg_E();

    EigenField eig = eig_sorted(state.H);
    ScalarField lmax = eig.lambda_field(0);
    rec.sup_lambda_max = sup(lmax);
    rec.osc_lambda_max = oscillation(lmax);

    ScalarField ef_lmax(g);
    for (int p = 0; p < g.size(); ++p) ef_lmax.v[p] = std::exp(state.f.v[p]) * lmax.v[p];
    rec.sup_ef_lambda_max = sup(ef_lmax);
    rec.mean_ef_lambda_max = mean(ef_lmax);

    ScalarField lf = laplacian(state.f);
    rec.sup_abs_laplacian_f = std::max(std::abs(sup(lf)), std::abs(inf(lf)));

    HermitianMatrixField m = assemble_M(state, params, t);
    double min_eig = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    for (int p = 0; p < g.size(); ++p) {
        es.compute(m.at(p), Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues()(0));
    }
    rec.min_eig_M = min_eig;

    rec.l1_slack = (mean(params.beta) / params.rank + (1.0 - t) * params.alpha) -
                   rec.mean_ef_lambda_max;
    rec.l1_ok = rec.l1_slack > -1e-8;

    rec.keyest_slack = consts.c_star - rec.sup_ef_lambda_max;
    rec.keyest_ok = rec.keyest_slack >= 0.0;

    // Subharmonicity of lambda_max at simple-top-eigenvalue points; the
    // compact-stencil Laplacian keeps eigenvalue-crossing kinks local.
    ScalarField fd_lmax = fd_laplacian(lmax);
    double margin = std::numeric_limits<double>::infinity();
    bool any_masked = false;
    for (int p = 0; p < g.size(); ++p) {
        double gap = params.rank == 1 ? std::numeric_limits<double>::infinity()
                                      : eig.lambda(p, 0) - eig.lambda(p, 1);
        if (gap < consts.gap_floor) continue;
        any_masked = true;
        margin = std::min(margin, fd_lmax.v[p] + consts.c_sub);
    }
    rec.subharm_margin = any_masked ? margin : consts.c_sub;
    rec.subharm_ok = rec.subharm_margin >= -consts.subharm_slack;

    rec.gposi_applicable = consts.griffiths_positive;
    if (rec.gposi_applicable) {
        rec.gposi_slack = rec.inf_f - (consts.gposi_floor - rec.osc_lambda_max);
        rec.gposi_ok = rec.gposi_slack >= -1e-6;
    } else {
        rec.gposi_slack = 0.0;
        rec.gposi_ok = true;
    }
    return rec;
}

bool CheckReport::all_passed() const {
    for (const CheckResult& c : checks)
        if (c.applicable && !c.pass) return false;
    return true;
}

CheckReport verify_apriori_bounds(const std::vector<DiagnosticsRecord>& history,
                                  const SystemParams& params, const EstimateConstants& consts,
                                  const std::vector<double>* osc_u_max_history) {
    (void)params;
    CheckReport report;

    // (a) strict mean inequality at every accepted step.
    CheckResult a{"l1_mean_bound"};
    a.pass = true;
    a.measured = std::numeric_limits<double>::infinity();
    for (const auto& rec : history) {
        if (rec.l1_slack < a.measured) {
            a.measured = rec.l1_slack;
            a.worst_t = rec.t;
        }
        a.pass = a.pass && rec.l1_ok;
    }
    a.bound = 0.0;
    report.checks.push_back(a);

    // (b) sup e^f lambda_max against the assembled path-independent constant.
    CheckResult b{"keyest_ef_lambda_max"};
    b.pass = true;
    b.bound = consts.c_star;
    for (const auto& rec : history) {
        if (rec.sup_ef_lambda_max > b.measured) {
            b.measured = rec.sup_ef_lambda_max;
            b.worst_t = rec.t;
        }
        b.pass = b.pass && rec.keyest_ok;
    }
    report.checks.push_back(b);

    // |Delta f| against the max-principle chain.
    CheckResult bf{"delta_f_bound"};
    bf.pass = true;
    bf.bound = consts.b_delta_f;
    for (const auto& rec : history) {
        if (rec.sup_abs_laplacian_f > bf.measured) {
            bf.measured = rec.sup_abs_laplacian_f;
            bf.worst_t = rec.t;
        }
        bf.pass = bf.pass && rec.sup_abs_laplacian_f <= consts.b_delta_f;
    }
    report.checks.push_back(bf);

    // (c) masked subharmonicity margin.
    CheckResult c{"lambda_max_subharmonic"};
    c.pass = true;
    c.bound = -consts.subharm_slack;
    c.measured = std::numeric_limits<double>::infinity();
    for (const auto& rec : history) {
        if (rec.subharm_margin < c.measured) {
            c.measured = rec.subharm_margin;
            c.worst_t = rec.t;
        }
        c.pass = c.pass && rec.subharm_ok;
    }
    report.checks.push_back(c);

    // (d) oscillation floor for f, Griffiths-positive references only.
    CheckResult d{"gposi_floor"};
    d.applicable = consts.griffiths_positive;
    d.pass = true;
    d.bound = -1e-6;
    d.measured = std::numeric_limits<double>::infinity();
    for (const auto& rec : history) {
        if (!rec.gposi_applicable) continue;
        if (rec.gposi_slack < d.measured) {
            d.measured = rec.gposi_slack;
            d.worst_t = rec.t;
        }
        d.pass = d.pass && rec.gposi_ok;
    }
    report.checks.push_back(d);

    // (e) osc u_max along direct-sum runs.
    CheckResult e{"osc_u_max"};
    e.applicable = osc_u_max_history != nullptr;
    e.pass = true;
    e.bound = consts.c_osc;
    if (osc_u_max_history) {
        for (std::size_t i = 0; i < osc_u_max_history->size(); ++i) {
            double v = (*osc_u_max_history)[i];
            if (v > e.measured) {
                e.measured = v;
                e.worst_t = i < history.size() ? history[i].t : 0.0;
            }
            e.pass = e.pass && v <= consts.c_osc;
        }
    }
    report.checks.push_back(e);
    return report;
}

DeltanormResult verify_deltanorm(const MetricState& state, const SystemParams& params) {
    const GridSpec g = state.f.grid;
    const int r = params.rank;
    DeltanormResult res;
    ScalarField w(g);
    for (int p = 0; p < g.size(); ++p)
        w.v[p] = std::sqrt(state.H.at(p).squaredNorm() + 1.0);
    ScalarField lw = laplacian(w);

    double c = 0.0;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);
    for (int p = 0; p < g.size(); ++p)
        c = std::max(c, (((params.beta.v[p] / r) * id + params.c0.at(p))).norm());
    res.c_used = r * c;
    res.slack = 1e-6 + 100.0 / (static_cast<double>(g.n) * g.n);

    res.violation = ScalarField(g);
    for (int p = 0; p < g.size(); ++p) {
        double lhs = -lw.v[p];
        double rhs = -std::exp(state.f.v[p]) * w.v[p] + res.c_used;
        res.violation.v[p] = lhs - rhs;
    }
    res.max_violation = sup(res.violation);
    res.pass = res.max_violation <= res.slack;
    return res;
}

LaplaceIdentityResult verify_laplace_identity(const HermitianMatrixField& H,
                                              const ConnectionData& A, double gap_floor) {
    const GridSpec g = H.grid;
    const int r = H.rank;
    EigenframeConnection ec = eigenframe_connection(H, A, gap_floor);
    MatrixFormField d = demailly_D(H, A);

    std::vector<ScalarField> dl;
    dl.reserve(r);
    for (int i = 0; i < r; ++i) dl.push_back(laplacian(ec.eig.lambda_field(i)));

    LaplaceIdentityResult out;
    int masked = 0;
    for (int p = 0; p < g.size(); ++p) {
        if (!ec.mask[p]) continue;
        ++masked;
        ConstMatMap u = std::as_const(ec.eig).u_at(p);
        Eigen::MatrixXcd deig = u.adjoint() * d.at(p) * u;
        for (int i = 0; i < r; ++i) {
            double res = dl[i].v[p] + deig(i, i).real();
            for (int j = 0; j < r; ++j) {
                if (j == i) continue;
                double li = ec.eig.lambda(p, i), lj = ec.eig.lambda(p, j);
                res -= (std::exp(li - lj) - 1.0) * ec.c_at(p, i, j);
                res += (std::exp(lj - li) - 1.0) * ec.c_at(p, j, i);
            }
            out.max_masked_residual = std::max(out.max_masked_residual, std::abs(res));
        }
    }
    out.masked_fraction = static_cast<double>(masked) / g.size();
    return out;
}

namespace {

// Second fundamental form energy density: 2 ||pi_perp (d0 pi)||_F^2.
ScalarField second_fundamental_density(const HermitianMatrixField& pi, const ConnectionData& A) {
    MatrixFormField dpi = covariant_d0(pi, A);
    ScalarField out(pi.grid);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(pi.rank, pi.rank);
    for (int p = 0; p < pi.points(); ++p) {
        Eigen::MatrixXcd perp = id - pi.at(p);
        out.v[p] = 2.0 * (perp * dpi.at(p)).squaredNorm();
    }
    return out;
}

} // namespace

double estimate_quotient_degree(const HermitianMatrixField& pi, const SystemParams& params) {
    const GridSpec g = pi.grid;
    const int r = pi.rank;
    double defect = 0.0;
    for (int p = 0; p < g.size(); ++p) {
        ConstMatMap m = pi.at(p);
        defect = std::max(defect, (m * m - m).norm());
        defect = std::max(defect, (m - m.adjoint()).norm());
    }
    if (defect > 1e-6) throw NotAProjector(defect);

    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);
    ScalarField density = second_fundamental_density(pi, params.A);
    ScalarField integrand(g);
    for (int p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd f0 = (params.beta.v[p] / r) * id + params.c0.at(p);
        Eigen::MatrixXcd perp = id - pi.at(p);
        integrand.v[p] = (f0 * perp).trace().real() + density.v[p];
    }
    return mean(integrand);
}

std::optional<DestabilizationReport> detect_destabilization(const MetricState& state,
                                                            const SystemParams& params, double t,
                                                            const DestabProbeConfig& probe) {
    const GridSpec g = state.H.grid;
    const int r = params.rank;
    if (r < 2) return std::nullopt; // no proper subbundle possible

    EigenField eig = eig_sorted(state.H);
    double m_t = eig.lambda(0, 0);
    for (int p = 0; p < g.size(); ++p) m_t = std::max(m_t, eig.lambda(p, 0));

    // Log eigenvalues of g~ (all <= 0); locate the largest gap.
    std::vector<double> logs;
    logs.reserve(static_cast<std::size_t>(g.size()) * r);
    for (int p = 0; p < g.size(); ++p)
        for (int i = 0; i < r; ++i) logs.push_back(eig.lambda(p, i) - m_t);
    std::sort(logs.begin(), logs.end());

    double gap_width = 0.0, gap_mid = 0.0;
    for (std::size_t k = 0; k + 1 < logs.size(); ++k) {
        double w = logs[k + 1] - logs[k];
        if (w > gap_width) {
            gap_width = w;
            gap_mid = 0.5 * (logs[k + 1] + logs[k]);
        }
    }
    double log_cut;
    if (gap_width >= probe.min_gap_width) {
        log_cut = gap_mid;
    } else {
        log_cut = std::log(0.5); // unimodal fallback
        gap_width = probe.min_gap_width;
    }

    // Pointwise spectral projector below the cut, with resolution bookkeeping.
    HermitianMatrixField pi(g, r);
    std::vector<int> rank_at(g.size(), 0);
    std::vector<char> resolved(g.size(), 1);
    const double band = probe.resolve_fraction * gap_width;
    for (int p = 0; p < g.size(); ++p) {
        ConstMatMap u = std::as_const(eig).u_at(p);
        Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(r, r);
        for (int i = 0; i < r; ++i) {
            double l = eig.lambda(p, i) - m_t;
            if (std::abs(l - log_cut) < band) resolved[p] = 0;
            if (l <= log_cut) {
                proj += u.col(i) * u.col(i).adjoint();
                ++rank_at[p];
            }
        }
        pi.at(p) = 0.5 * (proj + proj.adjoint()).eval();
    }

    std::vector<int> count(r + 1, 0);
    for (int p = 0; p < g.size(); ++p)
        if (resolved[p]) ++count[rank_at[p]];
    int mode_rank = 0, mode_count = -1;
    for (int k = 0; k <= r; ++k) {
        if (count[k] > mode_count) {
            mode_count = count[k];
            mode_rank = k;
        }
    }
    int agree = 0;
    for (int p = 0; p < g.size(); ++p)
        if (resolved[p] && rank_at[p] == mode_rank) ++agree;
    double frac = static_cast<double>(agree) / g.size();
    if (frac < probe.min_resolved_fraction || mode_rank < 1 || mode_rank > r - 1)
        return std::nullopt;

    DestabilizationReport rep;
    rep.t = t;
    rep.m_t = m_t;
    rep.eps_cut = std::exp(log_cut);
    rep.pi = pi;
    rep.rank_pi = mode_rank;
    rep.resolved_fraction = frac;

    // sigma -> 0 convergence probe for g~^sigma.
    double sigma = 1.0;
    HermitianMatrixField prev = exp_from_eig(eig, sigma);
    prev *= std::exp(-sigma * m_t);
    for (int j = 1; j < probe.sigma_levels; ++j) {
        rep.sigma_schedule.push_back(sigma);
        double next_sigma = sigma * 0.5;
        HermitianMatrixField next = exp_from_eig(eig, next_sigma);
        next *= std::exp(-next_sigma * m_t);
        double acc = 0.0;
        for (int p = 0; p < g.size(); ++p) acc += (next.at(p) - prev.at(p)).squaredNorm();
        rep.sigma_deltas.push_back(std::sqrt(acc / g.size()));
        prev = std::move(next);
        sigma = next_sigma;
    }
    rep.sigma_schedule.push_back(sigma);

    // Histogram of lambda_i - m over [min, 0].
    rep.hist_lo = logs.front();
    rep.hist_hi = 0.0;
    rep.eig_histogram.assign(probe.histogram_bins, 0);
    const double span = std::max(1e-12, rep.hist_hi - rep.hist_lo);
    for (double l : logs) {
        int bin = static_cast<int>((l - rep.hist_lo) / span * probe.histogram_bins);
        bin = std::clamp(bin, 0, probe.histogram_bins - 1);
        ++rep.eig_histogram[bin];
    }

    rep.second_fundamental_norm = mean(second_fundamental_density(pi, params.A));
    rep.degQ_estimate = estimate_quotient_degree(pi, params);
    return rep;
}

} // namespace demailly
