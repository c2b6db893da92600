#ifndef DEMAILLY_CONFIG_HPP
#define DEMAILLY_CONFIG_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "demailly/continuation.hpp"

namespace demailly {

/// Parsed scenario settings (key = value file plus CLI overrides). Optional
/// fields default per preset at build time.
struct ScenarioConfig {
    std::string preset; // ample_sum | nonample_sum | constant_model | extension | "" (explicit)
    int n = 64;
    std::optional<int> rank;
    std::uint64_t seed = 0;

    std::optional<double> beta_const;
    std::vector<std::array<double, 4>> beta_modes; // k1, k2, re, im per entry
    double beta_perturb = 0.0;                     // band-limited amplitude, seeded
    int beta_perturb_kmax = 2;
    std::vector<double> c0_diag;

    std::string a01_kind = "zero"; // zero | constant | random
    std::vector<double> a01_entries; // row-major re, im pairs (rank^2 entries)
    int a01_kmax = 2;
    double a01_amplitude = 0.3;
    double extension_eps = 0.5;

    double alpha_margin = 1.0;
    std::optional<double> lambda_exp; // default 2r

    double dt_init = 0.05;
    double dt_min = 1e-6;
    double dt_max = 0.25;
    double newton_tol = 1e-10;
    int max_newton = 30;
    double destab_f_floor = -8.0;
    double destab_lambda_ceiling = 2980.9579870417283; // e^8
    int record_every = 1;

    std::string out_dir = "out";
    bool emit_snapshots = false;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses a key = value file ('#' comments, INI section headers ignored).
/// Throws ParseError with the offending line, or ValidationError per key.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);

/// Canonical text form; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& config);

/// Raw scenario fields before the t = 0 setup.
struct PresetFields {
    int rank = 0;
    ScalarField beta;
    HermitianMatrixField c0;
    ConnectionData A;
    bool diagonal = false;            // A = 0 and c0 diagonal
    std::vector<ScalarField> beta_i;  // per-factor curvatures when diagonal
};
PresetFields build_preset(const ScenarioConfig& config);

/// Fields + cushioned setup + path settings, ready to run.
struct Scenario {
    SystemParams params;
    MetricState state0;
    PathConfig path;
    PresetFields fields;
    double lambda_exp = 0.0;
};
Scenario build_scenario(const ScenarioConfig& config);

} // namespace demailly

#endif
