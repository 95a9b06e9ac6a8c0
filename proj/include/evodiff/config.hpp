#pragma once

#include <map>
#include <string>
#include <vector>

#include "evodiff/grid.hpp"
#include "evodiff/growth.hpp"
#include "evodiff/models.hpp"
#include "evodiff/solver.hpp"

namespace evodiff {

/// Application configuration, one human-editable file in a small
/// TOML-style dialect (sections, key = value, numbers / quoted strings /
/// booleans / one-line arrays, # comments).  Unknown sections or keys are
/// rejected, except under [model.constants], which is free-form.  All
/// fields carry defaults, and write_config emits every key, so
/// load -> write -> load is the identity on valid configs.
struct GrowthSection {
    std::string kind = "static"; // static | isotropic-exponential | isotropic-logistic
                                 // | per-axis | tabulated
    int dim = 1;
    double horizon = 1.0;
    double rho = 0.0;
    double saturation = 2.0;
    std::vector<std::string> scales;              // per-axis expressions in t
    std::vector<double> times;                    // tabulated sample times
    std::vector<std::vector<double>> values;      // tabulated scales per axis
    std::string jacobian = "paper-sqrt";          // paper-sqrt | standard-det
    bool operator==(const GrowthSection&) const = default;
};

struct ModelSection {
    std::string builtin;                          // empty = custom expressions
    std::vector<std::string> f;
    std::vector<std::string> g;
    std::vector<double> d;
    std::map<std::string, double> constants;
    std::vector<std::string> initial;             // expressions in x, y, z
    std::string initial_snapshot;                 // alternative: snapshot path
    std::string flux_convention = "d-scaled";     // d-scaled | plain
    bool operator==(const ModelSection&) const = default;
};

struct GridSection {
    std::vector<double> extents{1.0};
    std::vector<int> nodes{65};
    bool operator==(const GridSection&) const = default;
};

struct TimeSection {
    double t_end = 1.0;
    double dt = 0.0; // 0 = automatic
    std::string stepper = "rk4"; // rk4 | imex-cn
    double safety = 0.9;
    int snapshot_every = 0; // steps; 0 = automatic
    bool operator==(const TimeSection&) const = default;
};

struct DiagnosticsSection {
    int lyapunov_p = 2;
    std::string positivity = "auto"; // auto | on | off
    double overshoot_tol = 1e-8;
    double blowup_threshold = 0.0; // 0 = automatic 1e6 * (1 + sup |u0|)
    bool quasi_positivity_precheck = true;
    std::vector<double> mass_weights;
    bool operator==(const DiagnosticsSection&) const = default;
};

struct OutputSection {
    std::string directory = "out";
    std::string prefix = "run";
    bool snapshots = true;
    bool diagnostics = true;
    bool operator==(const OutputSection&) const = default;
};

struct AppConfig {
    int schema = 1;
    GrowthSection growth;
    ModelSection model;
    GridSection grid;
    TimeSection time;
    DiagnosticsSection diagnostics;
    OutputSection output;
    bool operator==(const AppConfig&) const = default;
};

/// Parses and validates; collects *all* validation problems into one
/// ConfigError rather than stopping at the first.  Parse errors (malformed
/// line, duplicate key) carry line/column positions.
AppConfig parse_config(const std::string& text, const std::string& source_name = "<config>");
AppConfig load_config(const std::string& path);

/// Canonical text form: fixed section and key order, %.17g numbers; the
/// exact inverse of parse_config on valid configs.
std::string write_config(const AppConfig& cfg);
void save_config(const AppConfig& cfg, const std::string& path);

/// FNV-1a (64-bit) hash of the canonical text, as 16 hex digits.
std::string config_hash(const AppConfig& cfg);

/// Runtime objects from validated sections.
GrowthLaw make_growth(const GrowthSection& g);
ReactionModel make_model(const ModelSection& m);
Grid make_grid(const GridSection& g);
/// Initial state from per-component expressions in x, y, z (or the
/// configured snapshot file).
StateField make_initial(const AppConfig& cfg, const Grid& grid, const ReactionModel& model);
SolveOptions make_solve_options(const AppConfig& cfg);

} // namespace evodiff
