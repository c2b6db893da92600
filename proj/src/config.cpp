#include "demailly/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "demailly/errors.hpp"

namespace demailly {

namespace {

struct RawEntry {
    int line;
    std::string key, value;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<RawEntry> tokenize(const std::string& text) {
    std::vector<RawEntry> entries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue; // INI section, ignored
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(lineno, "empty key");
        entries.push_back({lineno, key, value});
    }
    return entries;
}

double parse_double(const RawEntry& e) {
    try {
        std::size_t pos;
        double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ValidationError(e.key, "a real number (got '" + e.value + "')");
    }
}

long parse_int(const RawEntry& e) {
    try {
        std::size_t pos;
        long v = std::stol(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ValidationError(e.key, "an integer (got '" + e.value + "')");
    }
}

bool parse_bool(const RawEntry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ValidationError(e.key, "a boolean (got '" + e.value + "')");
}

std::vector<double> parse_list(const RawEntry& e) {
    std::vector<double> out;
    std::istringstream in(e.value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw ValidationError(e.key, "a comma-separated list of reals");
        }
    }
    return out;
}

std::vector<std::array<double, 4>> parse_modes(const RawEntry& e) {
    // "k1,k2,re,im; k1,k2,re,im; ..."
    std::vector<std::array<double, 4>> out;
    std::istringstream groups(e.value);
    std::string group;
    while (std::getline(groups, group, ';')) {
        group = trim(group);
        if (group.empty()) continue;
        RawEntry sub{e.line, e.key, group};
        std::vector<double> vals = parse_list(sub);
        if (vals.size() != 4)
            throw ValidationError(e.key, "mode entries of the form k1,k2,re,im");
        out.push_back({vals[0], vals[1], vals[2], vals[3]});
    }
    return out;
}

void validate(const ScenarioConfig& c) {
    if (c.n < 8 || c.n % 2 != 0) throw ValidationError("n", ">= 8 and even");
    if (c.rank && (*c.rank < 1 || *c.rank > 8)) throw ValidationError("rank", "between 1 and 8");
    if (!(c.alpha_margin > 0.0)) throw ValidationError("alpha_margin", "> 0");
    if (c.lambda_exp && !(*c.lambda_exp > 0.0)) throw ValidationError("lambda_exp", "> 0");
    if (!(c.dt_min > 0.0)) throw ValidationError("dt_min", "> 0");
    if (!(c.dt_min <= c.dt_init)) throw ValidationError("dt_init", ">= dt_min");
    if (!(c.dt_init <= c.dt_max)) throw ValidationError("dt_max", ">= dt_init");
    if (!(c.dt_max <= 1.0)) throw ValidationError("dt_max", "<= 1");
    if (!(c.newton_tol > 0.0)) throw ValidationError("newton_tol", "> 0");
    if (c.max_newton < 1) throw ValidationError("max_newton", ">= 1");
    if (c.record_every < 1) throw ValidationError("record_every", ">= 1");
    if (c.beta_perturb < 0.0) throw ValidationError("beta_perturb", ">= 0");
    if (c.beta_perturb_kmax < 1) throw ValidationError("beta_perturb_kmax", ">= 1");
    if (!(c.destab_lambda_ceiling > 1.0)) throw ValidationError("destab_lambda_ceiling", "> 1");
    if (c.a01_kind != "zero" && c.a01_kind != "constant" && c.a01_kind != "random")
        throw ValidationError("a01", "one of zero | constant | random");
    if (c.a01_kmax < 1) throw ValidationError("a01_kmax", ">= 1");
    if (c.a01_amplitude < 0.0) throw ValidationError("a01_amplitude", ">= 0");
    if (!(c.extension_eps > 0.0)) throw ValidationError("extension_eps", "> 0");
    if (!c.preset.empty() && c.preset != "ample_sum" && c.preset != "nonample_sum" &&
        c.preset != "constant_model" && c.preset != "extension")
        throw ValidationError("preset", "a known preset name");
}

} // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    ScenarioConfig c;
    for (const RawEntry& e : tokenize(text)) {
        if (e.key == "preset") c.preset = e.value;
        else if (e.key == "n") c.n = static_cast<int>(parse_int(e));
        else if (e.key == "rank") c.rank = static_cast<int>(parse_int(e));
        else if (e.key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(e));
        else if (e.key == "beta") c.beta_const = parse_double(e);
        else if (e.key == "beta_modes") c.beta_modes = parse_modes(e);
        else if (e.key == "beta_perturb") c.beta_perturb = parse_double(e);
        else if (e.key == "beta_perturb_kmax") c.beta_perturb_kmax = static_cast<int>(parse_int(e));
        else if (e.key == "c0_diag") c.c0_diag = parse_list(e);
        else if (e.key == "a01") c.a01_kind = e.value;
        else if (e.key == "a01_entries") c.a01_entries = parse_list(e);
        else if (e.key == "a01_kmax") c.a01_kmax = static_cast<int>(parse_int(e));
        else if (e.key == "a01_amplitude") c.a01_amplitude = parse_double(e);
        else if (e.key == "extension_eps") c.extension_eps = parse_double(e);
        else if (e.key == "alpha_margin") c.alpha_margin = parse_double(e);
        else if (e.key == "lambda_exp") c.lambda_exp = parse_double(e);
        else if (e.key == "dt_init") c.dt_init = parse_double(e);
        else if (e.key == "dt_min") c.dt_min = parse_double(e);
        else if (e.key == "dt_max") c.dt_max = parse_double(e);
        else if (e.key == "newton_tol") c.newton_tol = parse_double(e);
        else if (e.key == "max_newton") c.max_newton = static_cast<int>(parse_int(e));
        else if (e.key == "destab_f_floor") c.destab_f_floor = parse_double(e);
        else if (e.key == "destab_lambda_ceiling") c.destab_lambda_ceiling = parse_double(e);
        else if (e.key == "record_every") c.record_every = static_cast<int>(parse_int(e));
        else if (e.key == "out_dir") c.out_dir = e.value;
        else if (e.key == "emit_snapshots") c.emit_snapshots = parse_bool(e);
        else throw ParseError(e.line, "unknown key '" + e.key + "'");
    }
    validate(c);
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string serialize_config(const ScenarioConfig& c) {
    std::ostringstream out;
    if (!c.preset.empty()) out << "preset = " << c.preset << "\n";
    out << "n = " << c.n << "\n";
    if (c.rank) out << "rank = " << *c.rank << "\n";
    out << "seed = " << c.seed << "\n";
    if (c.beta_const) out << "beta = " << fmt(*c.beta_const) << "\n";
    if (!c.beta_modes.empty()) {
        out << "beta_modes = ";
        for (std::size_t i = 0; i < c.beta_modes.size(); ++i) {
            const auto& m = c.beta_modes[i];
            out << fmt(m[0]) << "," << fmt(m[1]) << "," << fmt(m[2]) << "," << fmt(m[3]);
            if (i + 1 < c.beta_modes.size()) out << "; ";
        }
        out << "\n";
    }
    out << "beta_perturb = " << fmt(c.beta_perturb) << "\n";
    out << "beta_perturb_kmax = " << c.beta_perturb_kmax << "\n";
    if (!c.c0_diag.empty()) {
        out << "c0_diag = ";
        for (std::size_t i = 0; i < c.c0_diag.size(); ++i) {
            out << fmt(c.c0_diag[i]);
            if (i + 1 < c.c0_diag.size()) out << ",";
        }
        out << "\n";
    }
    out << "a01 = " << c.a01_kind << "\n";
    if (!c.a01_entries.empty()) {
        out << "a01_entries = ";
        for (std::size_t i = 0; i < c.a01_entries.size(); ++i) {
            out << fmt(c.a01_entries[i]);
            if (i + 1 < c.a01_entries.size()) out << ",";
        }
        out << "\n";
    }
    out << "a01_kmax = " << c.a01_kmax << "\n";
    out << "a01_amplitude = " << fmt(c.a01_amplitude) << "\n";
    out << "extension_eps = " << fmt(c.extension_eps) << "\n";
    out << "alpha_margin = " << fmt(c.alpha_margin) << "\n";
    if (c.lambda_exp) out << "lambda_exp = " << fmt(*c.lambda_exp) << "\n";
    out << "dt_init = " << fmt(c.dt_init) << "\n";
    out << "dt_min = " << fmt(c.dt_min) << "\n";
    out << "dt_max = " << fmt(c.dt_max) << "\n";
    out << "newton_tol = " << fmt(c.newton_tol) << "\n";
    out << "max_newton = " << c.max_newton << "\n";
    out << "destab_f_floor = " << fmt(c.destab_f_floor) << "\n";
    out << "destab_lambda_ceiling = " << fmt(c.destab_lambda_ceiling) << "\n";
    out << "record_every = " << c.record_every << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    out << "emit_snapshots = " << (c.emit_snapshots ? "true" : "false") << "\n";
    return out.str();
}

namespace {

ScalarField build_beta(const ScenarioConfig& c, GridSpec g, double preset_default) {
    double base = c.beta_const ? *c.beta_const : preset_default;
    ScalarField beta(g, base);
    for (const auto& m : c.beta_modes) {
        // amp e^{2 pi i (k1 x + k2 y)} + conjugate, so the field stays real.
        for (int jx = 0; jx < g.n; ++jx) {
            for (int jy = 0; jy < g.n; ++jy) {
                double phase = 2.0 * M_PI * (m[0] * g.x(jx) + m[1] * g.y(jy));
                beta.at(jx, jy) += 2.0 * (m[2] * std::cos(phase) - m[3] * std::sin(phase));
            }
        }
    }
    if (c.beta_perturb > 0.0)
        beta += band_limited_random(g, c.seed, c.beta_perturb_kmax, c.beta_perturb);
    return beta;
}

int preset_rank(const ScenarioConfig& c) {
    if (c.preset == "constant_model") return c.rank.value_or(1);
    if (c.preset.empty()) {
        if (!c.rank) throw ValidationError("rank", "required without a preset");
        return *c.rank;
    }
    if (c.rank && *c.rank != 2)
        throw ValidationError("rank", "fixed to 2 by preset '" + c.preset + "'");
    return 2;
}

ConnectionData build_connection(const ScenarioConfig& c, GridSpec g, int r) {
    if (c.a01_kind == "zero") return ConnectionData::zero(g, r);
    if (c.a01_kind == "constant") {
        if (c.a01_entries.size() != static_cast<std::size_t>(2 * r * r))
            throw ValidationError("a01_entries", "2 r^2 values (re, im row-major)");
        MatrixFormField a01(g, r, FormKind::DzbarCoeff);
        Eigen::MatrixXcd m(r, r);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                std::size_t k = 2 * (static_cast<std::size_t>(i) * r + j);
                m(i, j) = cplx(c.a01_entries[k], c.a01_entries[k + 1]);
            }
        for (int p = 0; p < g.size(); ++p) a01.at(p) = m;
        return ConnectionData(std::move(a01));
    }
    // band-limited random, seeded after the beta perturbation stream
    return ConnectionData(
        random_form_band_limited(g, r, FormKind::DzbarCoeff, c.seed + 1000, c.a01_kmax,
                                 c.a01_amplitude));
}

} // namespace

PresetFields build_preset(const ScenarioConfig& c) {
    GridSpec g(c.n);
    PresetFields f;

    if (c.preset == "ample_sum" || c.preset == "nonample_sum") {
        const double d1 = 2.0;
        const double d2 = c.preset == "ample_sum" ? 1.0 : -1.0;
        f.rank = preset_rank(c);
        f.beta = build_beta(c, g, d1 + d2);
        f.c0 = HermitianMatrixField::constant_diag(g, {(d1 - d2) / 2, (d2 - d1) / 2});
        f.A = ConnectionData::zero(g, 2);
        f.diagonal = true;
        // Per-factor curvatures; the beta perturbation splits evenly.
        ScalarField common = f.beta;
        common *= 0.5;
        ScalarField b1 = common, b2 = common;
        b1 += (d1 - d2) / 2;
        b2 += (d2 - d1) / 2;
        f.beta_i = {b1, b2};
        return f;
    }

    if (c.preset == "constant_model") {
        f.rank = preset_rank(c);
        if (f.rank != 1 && f.rank != 2)
            throw ValidationError("rank", "1 or 2 for constant_model");
        double beta_default = f.rank == 1 ? 3.0 : 4.0;
        f.beta = build_beta(c, g, beta_default);
        if (f.rank == 1) {
            f.c0 = HermitianMatrixField(g, 1);
        } else {
            std::vector<double> d = c.c0_diag.empty() ? std::vector<double>{1.0, -1.0} : c.c0_diag;
            if (static_cast<int>(d.size()) != f.rank)
                throw ValidationError("c0_diag", "rank entries");
            f.c0 = HermitianMatrixField::constant_diag(g, d);
        }
        f.A = ConnectionData::zero(g, f.rank);
        f.diagonal = true;
        f.beta_i.assign(f.rank, ScalarField(g));
        for (int i = 0; i < f.rank; ++i) {
            ScalarField b = f.beta;
            b *= 1.0 / f.rank;
            b += f.c0.at(0)(i, i).real();
            f.beta_i[i] = b;
        }
        return f;
    }

    if (c.preset == "extension") {
        f.rank = preset_rank(c);
        const double d1 = 1.0, d2 = 1.0;
        Eigen::MatrixXcd nil = Eigen::MatrixXcd::Zero(2, 2);
        nil(0, 1) = c.extension_eps;
        MatrixFormField a01(g, 2, FormKind::DzbarCoeff);
        for (int p = 0; p < g.size(); ++p) a01.at(p) = nil;
        f.A = ConnectionData(std::move(a01));
        // Fold the connection curvature into (beta, c0) so the data is
        // internally consistent.
        HermitianMatrixField fa = connection_curvature(f.A);
        ScalarField tr_fa(g);
        for (int p = 0; p < g.size(); ++p) tr_fa.v[p] = fa.at(p).trace().real();
        f.beta = build_beta(c, g, d1 + d2);
        f.beta += tr_fa;
        f.c0 = fa;
        make_traceless(f.c0);
        f.diagonal = false;
        return f;
    }

    // Explicit mode: rank, beta and c0_diag from the config.
    f.rank = preset_rank(c);
    if (!c.beta_const && c.beta_modes.empty())
        throw ValidationError("beta", "required without a preset");
    f.beta = build_beta(c, g, 0.0);
    std::vector<double> d = c.c0_diag;
    if (d.empty()) d.assign(f.rank, 0.0);
    if (static_cast<int>(d.size()) != f.rank) throw ValidationError("c0_diag", "rank entries");
    double tr = 0.0;
    for (double x : d) tr += x;
    if (std::abs(tr) > 1e-12) throw ValidationError("c0_diag", "trace zero");
    f.c0 = HermitianMatrixField::constant_diag(g, d);
    f.A = build_connection(c, g, f.rank);
    f.diagonal = c.a01_kind == "zero";
    if (f.diagonal) {
        f.beta_i.assign(f.rank, ScalarField(g));
        for (int i = 0; i < f.rank; ++i) {
            ScalarField b = f.beta;
            b *= 1.0 / f.rank;
            b += d[i];
            f.beta_i[i] = b;
        }
    }
    return f;
}

Scenario build_scenario(const ScenarioConfig& c) {
    Scenario s;
    s.fields = build_preset(c);
    s.lambda_exp = c.lambda_exp ? *c.lambda_exp : 2.0 * s.fields.rank;
    auto [params, state] =
        setup_t0(s.fields.beta, s.fields.c0, s.fields.A, c.alpha_margin, s.lambda_exp);
    s.params = std::move(params);
    s.state0 = std::move(state);
    s.path.dt_init = c.dt_init;
    s.path.dt_min = c.dt_min;
    s.path.dt_max = c.dt_max;
    s.path.newton_tol = c.newton_tol;
    s.path.max_newton = c.max_newton;
    s.path.destab_f_floor = c.destab_f_floor;
    s.path.destab_lambda_ceiling = c.destab_lambda_ceiling;
    s.path.record_every = c.record_every;
    return s;
}

} // namespace demailly
