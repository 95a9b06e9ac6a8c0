#include "evodiff/io.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "evodiff/common.hpp"

namespace evodiff {

namespace {

std::string fmt_num(double v) { return strfmt("%.17g", v); }

std::string header_line(const SnapshotHeader& h) {
    std::string nodes;
    for (std::size_t k = 0; k < h.nodes.size(); ++k) {
        if (k) nodes += ",";
        nodes += strfmt("%d", h.nodes[k]);
    }
    return strfmt("evodiff v1 n=%d m=%zu N=%s t=%s\n", h.dim, h.m, nodes.c_str(),
                  fmt_num(h.t).c_str());
}

SnapshotHeader parse_header(const std::string& line, const std::string& path) {
    std::istringstream in(line);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "evodiff" || version != "v1")
        throw IoError(strfmt("\"%s\" is not an evodiff v1 snapshot", path.c_str()));
    SnapshotHeader h;
    std::string tok;
    bool saw_n = false, saw_m = false, saw_nodes = false, saw_t = false;
    while (in >> tok) {
        if (tok.rfind("n=", 0) == 0) {
            h.dim = std::atoi(tok.c_str() + 2);
            saw_n = true;
        } else if (tok.rfind("m=", 0) == 0) {
            h.m = static_cast<std::size_t>(std::atoll(tok.c_str() + 2));
            saw_m = true;
        } else if (tok.rfind("N=", 0) == 0) {
            std::istringstream list(tok.substr(2));
            std::string item;
            while (std::getline(list, item, ',')) h.nodes.push_back(std::atoi(item.c_str()));
            saw_nodes = true;
        } else if (tok.rfind("t=", 0) == 0) {
            h.t = std::strtod(tok.c_str() + 2, nullptr);
            saw_t = true;
        } else {
            throw IoError(strfmt("unrecognized header field \"%s\" in \"%s\"", tok.c_str(),
                                 path.c_str()));
        }
    }
    if (!saw_n || !saw_m || !saw_nodes || !saw_t)
        throw IoError(strfmt("incomplete snapshot header in \"%s\"", path.c_str()));
    if (h.dim < 1 || h.dim > 3 || h.nodes.size() != static_cast<std::size_t>(h.dim) ||
        h.m == 0)
        throw IoError(strfmt("inconsistent snapshot header in \"%s\"", path.c_str()));
    for (int N : h.nodes)
        if (N < 1) throw IoError(strfmt("bad node count in \"%s\"", path.c_str()));
    return h;
}

} // namespace

void write_snapshot(const StateField& state, const Grid& grid, const std::string& path) {
    if (state.components() == 0)
        throw ValidationError("cannot write a snapshot with zero components");
    for (const auto& c : state.comp)
        if (c.size() != grid.num_nodes())
            throw ValidationError(strfmt("component holds %zu values, grid has %zu nodes",
                                         c.size(), grid.num_nodes()));
    SnapshotHeader h;
    h.dim = grid.dim();
    h.m = state.components();
    h.nodes = grid.nodes();
    h.t = state.t;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(strfmt("cannot open \"%s\" for writing", path.c_str()));
    out << header_line(h);
    for (const auto& c : state.comp)
        out.write(reinterpret_cast<const char*>(c.data()),
                  static_cast<std::streamsize>(c.size() * sizeof(double)));
    if (!out) throw IoError(strfmt("short write to \"%s\"", path.c_str()));
}

StateField read_snapshot(const std::string& path, SnapshotHeader* header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(strfmt("cannot open snapshot \"%s\"", path.c_str()));
    std::string line;
    if (!std::getline(in, line)) throw IoError(strfmt("empty snapshot \"%s\"", path.c_str()));
    const SnapshotHeader h = parse_header(line, path);

    std::size_t total = 1;
    for (int N : h.nodes) total *= static_cast<std::size_t>(N);
    StateField state(h.m, total, h.t);
    for (auto& c : state.comp) {
        in.read(reinterpret_cast<char*>(c.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(total * sizeof(double)))
            throw IoError(strfmt("snapshot \"%s\" is truncated (expected %zu x %zu float64)",
                                 path.c_str(), h.m, total));
    }
    char extra = 0;
    if (in.read(&extra, 1))
        throw IoError(strfmt("snapshot \"%s\" has trailing bytes", path.c_str()));
    if (header) *header = h;
    return state;
}

StateField read_snapshot_for_grid(const std::string& path, const Grid& grid) {
    SnapshotHeader h;
    StateField state = read_snapshot(path, &h);
    if (h.dim != grid.dim())
        throw IoError(strfmt("snapshot \"%s\" is %d-dimensional, grid is %d-dimensional",
                             path.c_str(), h.dim, grid.dim()));
    if (h.nodes != grid.nodes()) {
        std::string got, want;
        for (std::size_t k = 0; k < h.nodes.size(); ++k)
            got += (k ? "x" : "") + strfmt("%d", h.nodes[k]);
        for (std::size_t k = 0; k < grid.nodes().size(); ++k)
            want += (k ? "x" : "") + strfmt("%d", grid.nodes()[k]);
        throw IoError(strfmt("snapshot \"%s\" layout %s does not match grid %s", path.c_str(),
                             got.c_str(), want.c_str()));
    }
    return state;
}

std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records) {
    const std::size_t m = records.empty() ? 0 : records.front().l1_bulk.size();
    std::string out = "t";
    for (std::size_t i = 1; i <= m; ++i) out += strfmt(",l1_omega_%zu", i);
    for (std::size_t i = 1; i <= m; ++i) out += strfmt(",l1_gamma_%zu", i);
    for (std::size_t i = 1; i <= m; ++i) out += strfmt(",sup_%zu", i);
    for (std::size_t i = 1; i <= m; ++i) out += strfmt(",min_%zu", i);
    out += ",evolving_mass,lyapunov_P,conservation_residual\n";
    for (const auto& r : records) {
        out += fmt_num(r.t);
        for (double v : r.l1_bulk) out += "," + fmt_num(v);
        for (double v : r.l1_boundary) out += "," + fmt_num(v);
        for (double v : r.sup) out += "," + fmt_num(v);
        for (double v : r.min) out += "," + fmt_num(v);
        out += "," + fmt_num(r.evolving_mass);
        out += "," + fmt_num(r.lyapunov_P);
        out += "," + fmt_num(r.conservation_residual);
        out += "\n";
    }
    return out;
}

void write_diagnostics_csv(const std::vector<DiagnosticsRecord>& records,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(strfmt("cannot open \"%s\" for writing", path.c_str()));
    out << diagnostics_csv(records);
    if (!out) throw IoError(strfmt("short write to \"%s\"", path.c_str()));
}

std::vector<std::string> export_plotdata(const Trajectory& traj, const Grid& grid,
                                         const std::string& what, const std::string& directory,
                                         const std::string& prefix) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const std::string base = (fs::path(directory) / prefix).string();

    auto write_text = [](const std::string& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError(strfmt("cannot open \"%s\" for writing", path.c_str()));
        out << text;
        if (!out) throw IoError(strfmt("short write to \"%s\"", path.c_str()));
    };

    if (what == "diagnostics") {
        const std::string path = base + "_diagnostics.csv";
        write_text(path, diagnostics_csv(traj.records));
        return {path};
    }

    const std::size_t m =
        traj.snapshots.empty() ? 0 : traj.snapshots.front().components();
    // center indices along the pinned axes of a line cut / point probe
    std::array<int, 3> center = {0, 0, 0};
    for (int k = 0; k < grid.dim(); ++k)
        center[static_cast<std::size_t>(k)] =
            (grid.nodes()[static_cast<std::size_t>(k)] - 1) / 2;

    if (what == "slice") {
        std::vector<std::string> paths;
        for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
            const StateField& snap = traj.snapshots[s];
            std::string text = "x";
            for (std::size_t i = 1; i <= m; ++i) text += strfmt(",u_%zu", i);
            text += "\n";
            const int N0 = grid.nodes()[0];
            for (int i = 0; i < N0; ++i) {
                const std::size_t p = grid.index(i, center[1], center[2]);
                text += fmt_num(static_cast<double>(i) * grid.spacing(0));
                for (std::size_t c = 0; c < m; ++c) text += "," + fmt_num(snap.comp[c][p]);
                text += "\n";
            }
            const std::string path = base + strfmt("_slice_%04zu.csv", s);
            write_text(path, text);
            paths.push_back(path);
        }
        return paths;
    }

    if (what == "series") {
        const std::size_t p = grid.index(center[0], center[1], center[2]);
        std::string text = "t";
        for (std::size_t i = 1; i <= m; ++i) text += strfmt(",u_%zu", i);
        text += "\n";
        for (const StateField& snap : traj.snapshots) {
            text += fmt_num(snap.t);
            for (std::size_t c = 0; c < m; ++c) text += "," + fmt_num(snap.comp[c][p]);
            text += "\n";
        }
        const std::string path = base + "_series.csv";
        write_text(path, text);
        return {path};
    }

    throw ValidationError(strfmt("unknown export selector \"%s\" (known: diagnostics, slice, "
                                 "series)",
                                 what.c_str()));
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["config_hash"] = manifest.config_hash;
    j["code_version"] = manifest.code_version;
    j["deviations"] = manifest.deviations;
    j["termination"] = manifest.termination;
    j["message"] = manifest.message;
    j["wall_seconds"] = manifest.wall_seconds;
    j["steps"] = manifest.steps;
    j["warnings"] = manifest.warnings;
    j["config_text"] = manifest.config_text;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(strfmt("cannot open \"%s\" for writing", path.c_str()));
    out << j.dump(2) << "\n";
    if (!out) throw IoError(strfmt("short write to \"%s\"", path.c_str()));
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(strfmt("cannot open manifest \"%s\"", path.c_str()));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError(strfmt("manifest \"%s\" is not valid JSON: %s", path.c_str(), e.what()));
    }
    RunManifest m;
    m.config_hash = j.value("config_hash", "");
    m.code_version = j.value("code_version", "");
    m.deviations = j.value("deviations", std::vector<std::string>{});
    m.termination = j.value("termination", "");
    m.message = j.value("message", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.steps = j.value("steps", static_cast<std::size_t>(0));
    m.warnings = j.value("warnings", std::vector<std::string>{});
    m.config_text = j.value("config_text", "");
    return m;
}

} // namespace evodiff
