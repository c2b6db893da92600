#ifndef DEMAILLY_DIAGNOSTICS_HPP
#define DEMAILLY_DIAGNOSTICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "demailly/system.hpp"

namespace demailly {

// Runtime verification of the a priori estimates: every "there exists a
// constant C" statement is operationalized as an explicit bound assembled
// from the scenario data (torus Green constants, mean bound, max principle),
// with a safety factor 2; the harness then checks the measured quantities
// against these computable bounds along the whole path.

struct EstimateConstants {
    double green_sup = 0.0; // max of the discrete Green field of Delta
    double green_l1 = 0.0;  // mean |Green field|
    double b_l1 = 0.0;      // mean beta / r + alpha  (mean bound, t = 0 worst case)
    double c_sub = 0.0;     // sup ||Lambda i F0||_2   (subharmonicity constant)
    double d1 = 0.0;        // sup beta / r + alpha    (lower Delta f bound)
    double f_up = 0.0;      // max-principle upper bound for f
    double c_star = 0.0;    // bound for sup e^f lambda_max
    double b_delta_f = 0.0; // bound for sup |Delta f|
    bool griffiths_positive = false;
    double gposi_floor = 0.0; // (1/lambda) ln(a_min^r / sup a0) when applicable
    double c_osc = 0.0;       // bound for osc u_max in direct-sum runs
    double gap_floor = 1e-3;  // eigenvalue-gap mask for pointwise checks
    double subharm_slack = 0.0;
};
EstimateConstants assemble_constants(const SystemParams& params);

/// Per-step observation: measured path quantities plus per-estimate slack.
struct DiagnosticsRecord {
    double t = 0.0;
    int newton_iters = 0;
    double residual_norm = 0.0;
    double sup_f = 0.0, inf_f = 0.0, osc_f = 0.0;
    double sup_lambda_max = 0.0, osc_lambda_max = 0.0;
    double sup_ef_lambda_max = 0.0, mean_ef_lambda_max = 0.0;
    double sup_abs_laplacian_f = 0.0;
    double min_eig_M = 0.0;
    double deg_E = 0.0;
    double l1_slack = 0.0;      // (mean beta/r + (1-t) alpha) - mean e^f lambda_max
    bool l1_ok = false;
    double keyest_slack = 0.0;  // c_star - sup e^f lambda_max
    bool keyest_ok = false;
    double subharm_margin = 0.0; // min over masked points of (Delta lambda_max + c_sub)
    bool subharm_ok = false;
    double gposi_slack = 0.0;   // inf f - (floor - osc lambda_max)
    bool gposi_ok = false;
    bool gposi_applicable = false;
};

DiagnosticsRecord record(const MetricState& state, const SystemParams& params,
                         const EstimateConstants& consts, double t, int newton_iters,
                         double residual_norm);

struct CheckResult {
    std::string name;
    bool applicable = true;
    bool pass = false;
    double measured = 0.0; // worst measured value
    double bound = 0.0;    // the bound it was held against
    double worst_t = 0.0;  // where the worst value occurred
};
struct CheckReport {
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

/// Bundled path checks: (a) the strict mean inequality, (b) the e^f lambda_max
/// bound and the |Delta f| bound, (c) masked subharmonicity of lambda_max,
/// (d) the oscillation floor for f on Griffiths-positive references, and
/// (e) osc u_max for direct-sum runs when a history is supplied.
CheckReport verify_apriori_bounds(const std::vector<DiagnosticsRecord>& history,
                                  const SystemParams& params, const EstimateConstants& consts,
                                  const std::vector<double>* osc_u_max_history = nullptr);

/// Pointwise inequality -Delta w <= -e^f w + C for w = sqrt(|H|^2 + 1),
/// C = r sup||Lambda i F0||_F plus discretization slack.
struct DeltanormResult {
    ScalarField violation; // lhs - rhs, positive = violated
    double max_violation = 0.0;
    double c_used = 0.0;
    double slack = 0.0;
    bool pass = false;
};
DeltanormResult verify_deltanorm(const MetricState& state, const SystemParams& params);

/// Evaluates the eigenvalue-Laplacian identity on masked points:
///   Delta lambda_i + D_eig^i_i - sum_j (e^{l_i-l_j}-1) C_ij + sum_j (e^{l_j-l_i}-1) C_ji.
struct LaplaceIdentityResult {
    double max_masked_residual = 0.0;
    double masked_fraction = 0.0;
};
LaplaceIdentityResult verify_laplace_identity(const HermitianMatrixField& H,
                                              const ConnectionData& A, double gap_floor);

struct DestabProbeConfig {
    int sigma_levels = 9;               // sigma = 1, 1/2, ..., 2^-8
    double min_gap_width = 1.0;         // log-eigenvalue gap below this = unimodal
    double resolve_fraction = 0.25;     // required distance from the cut, in gap widths
    double min_resolved_fraction = 0.99;
    int histogram_bins = 48;
};

/// Numerical proxy for the destabilizing subbundle: the spectral projector of
/// g~ = e^{-m} g below the largest gap in its log-eigenvalue histogram.
struct DestabilizationReport {
    double t = 0.0;
    double m_t = 0.0;     // sup lambda_max
    double eps_cut = 0.0; // spectral cutoff on the eigenvalues of g~
    std::vector<double> sigma_schedule;
    std::vector<double> sigma_deltas; // rms ||g~^{s_{j+1}} - g~^{s_j}||
    std::vector<int> eig_histogram;   // histogram of lambda_i - m
    double hist_lo = 0.0, hist_hi = 0.0;
    HermitianMatrixField pi; // projector onto the collapsing directions
    int rank_pi = 0;
    double resolved_fraction = 0.0;
    double degQ_estimate = 0.0;
    double second_fundamental_norm = 0.0; // mean 2||pi^perp d0 pi||_F^2
};

std::optional<DestabilizationReport> detect_destabilization(const MetricState& state,
                                                            const SystemParams& params, double t,
                                                            const DestabProbeConfig& probe = {});

/// deg Q estimate for a projector pi: mean of
///   tr((beta/r Id + c0) pi_perp) + 2 ||pi_perp d0 pi||_F^2.
/// Throws NotAProjector unless pi is idempotent Hermitian to 1e-6.
double estimate_quotient_degree(const HermitianMatrixField& pi, const SystemParams& params);

} // namespace demailly

#endif
