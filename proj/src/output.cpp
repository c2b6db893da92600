#include "demailly/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "demailly/errors.hpp"

namespace demailly {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string records_to_csv(const std::vector<DiagnosticsRecord>& records) {
    std::ostringstream out;
    out << "t,newton_iters,residual_norm,sup_f,inf_f,osc_f,sup_lambda_max,osc_lambda_max,"
           "sup_ef_lambda_max,mean_ef_lambda_max,sup_abs_laplacian_f,min_eig_M,deg_E,"
           "l1_slack,l1_ok,keyest_slack,keyest_ok,subharm_margin,subharm_ok,"
           "gposi_slack,gposi_ok,gposi_applicable\n";
    for (const DiagnosticsRecord& r : records) {
        out << fmt(r.t) << ',' << r.newton_iters << ',' << fmt(r.residual_norm) << ','
            << fmt(r.sup_f) << ',' << fmt(r.inf_f) << ',' << fmt(r.osc_f) << ','
            << fmt(r.sup_lambda_max) << ',' << fmt(r.osc_lambda_max) << ','
            << fmt(r.sup_ef_lambda_max) << ',' << fmt(r.mean_ef_lambda_max) << ','
            << fmt(r.sup_abs_laplacian_f) << ',' << fmt(r.min_eig_M) << ',' << fmt(r.deg_E) << ','
            << fmt(r.l1_slack) << ',' << (r.l1_ok ? 1 : 0) << ',' << fmt(r.keyest_slack) << ','
            << (r.keyest_ok ? 1 : 0) << ',' << fmt(r.subharm_margin) << ','
            << (r.subharm_ok ? 1 : 0) << ',' << fmt(r.gposi_slack) << ',' << (r.gposi_ok ? 1 : 0)
            << ',' << (r.gposi_applicable ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string outcome_to_text(const PathOutcome& outcome) {
    std::ostringstream out;
    switch (outcome.status) {
    case PathStatus::Success:
        out << "Success\n";
        out << "t_reached = " << fmt(outcome.t_reached) << "\n";
        out << "final_residual = " << fmt(outcome.best_norm) << "\n";
        break;
    case PathStatus::Destabilized: {
        out << "Destabilized\n";
        const DestabilizationReport& rep = *outcome.report;
        out << "t = " << fmt(rep.t) << "\n";
        out << "m_t = " << fmt(rep.m_t) << "\n";
        out << "eps_cut = " << fmt(rep.eps_cut) << "\n";
        out << "rank_pi = " << rep.rank_pi << "\n";
        out << "degQ_estimate = " << fmt(rep.degQ_estimate) << "\n";
        out << "second_fundamental_norm = " << fmt(rep.second_fundamental_norm) << "\n";
        out << "resolved_fraction = " << fmt(rep.resolved_fraction) << "\n";
        out << "sigma_schedule =";
        for (double s : rep.sigma_schedule) out << ' ' << fmt(s);
        out << "\nsigma_deltas =";
        for (double d : rep.sigma_deltas) out << ' ' << fmt(d);
        out << "\neig_histogram_range = [" << fmt(rep.hist_lo) << ", " << fmt(rep.hist_hi)
            << "]\neig_histogram =";
        for (int c : rep.eig_histogram) out << ' ' << c;
        out << "\n";
        break;
    }
    case PathStatus::Stalled:
        out << "Stalled\n";
        out << "t_reached = " << fmt(outcome.t_reached) << "\n";
        out << "best_norm = " << fmt(outcome.best_norm) << "\n";
        break;
    }
    return out.str();
}

int exit_code_for(PathStatus status) {
    switch (status) {
    case PathStatus::Success:
        return 0;
    case PathStatus::Destabilized:
        return 2;
    case PathStatus::Stalled:
    default:
        return 3;
    }
}

int write_outputs(const std::vector<DiagnosticsRecord>& records, const PathOutcome& outcome,
                  const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

    {
        std::ofstream csv(dir + "/records.csv", std::ios::binary);
        if (!csv) throw IoError("cannot write records.csv");
        csv << records_to_csv(records);
        if (!csv) throw IoError("write failed for records.csv");
    }
    {
        std::ofstream txt(dir + "/outcome.txt", std::ios::binary);
        if (!txt) throw IoError("cannot write outcome.txt");
        txt << outcome_to_text(outcome);
        if (!txt) throw IoError("write failed for outcome.txt");
    }
    return exit_code_for(outcome.status);
}

} // namespace demailly
