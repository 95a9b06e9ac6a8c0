#pragma once

#include <string>
#include <vector>

#include "evodiff/grid.hpp"
#include "evodiff/solver.hpp"

namespace evodiff {

/// Binary snapshot: one ASCII header line
///   evodiff v1 n=<dim> m=<components> N=<N1,N2,...> t=<time>
/// followed by m blocks of N1*...*Nn float64 values in row-major node
/// order, little-endian.  Read-back is bit-exact.
struct SnapshotHeader {
    int dim = 0;
    std::size_t m = 0;
    std::vector<int> nodes;
    double t = 0.0;
};

void write_snapshot(const StateField& state, const Grid& grid, const std::string& path);
StateField read_snapshot(const std::string& path, SnapshotHeader* header = nullptr);
/// Read-back validated against an expected grid layout.
StateField read_snapshot_for_grid(const std::string& path, const Grid& grid);

/// Diagnostics CSV, one row per record:
///   t, l1_omega_1..m, l1_gamma_1..m, sup_1..m, min_1..m,
///   evolving_mass, lyapunov_P, conservation_residual
/// with %.17g values (deterministic, re-export is byte-identical).
std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records);
void write_diagnostics_csv(const std::vector<DiagnosticsRecord>& records,
                           const std::string& path);

/// Plot exports.  `what` selects:
///   diagnostics - the CSV above;
///   slice       - per-snapshot line cut along axis 0 through the domain
///                 center (columns x, u_1..u_m);
///   series      - center-node time series (columns t, u_1..u_m).
/// Returns the written paths.  Unknown selector -> ValidationError.
std::vector<std::string> export_plotdata(const Trajectory& traj, const Grid& grid,
                                         const std::string& what, const std::string& directory,
                                         const std::string& prefix);

/// Run provenance: config hash + canonical text, code version, every
/// fidelity deviation active in the run, termination reason, wall time.
struct RunManifest {
    std::string config_hash;
    std::string code_version;
    std::vector<std::string> deviations;
    std::string termination;
    std::string message;
    double wall_seconds = 0.0;
    std::size_t steps = 0;
    std::vector<std::string> warnings;
    std::string config_text;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

} // namespace evodiff
