#include "evodiff/operators.hpp"

#include <cmath>

#include "evodiff/common.hpp"
#include "evodiff/threads.hpp"

namespace evodiff {

namespace {

// Face-node index of a boundary node: row-major over the non-pinned axes,
// matching the order Grid used to build Face::nodes.
std::size_t face_slot(const Grid& grid, const Face& face, const std::array<int, 3>& c) {
    std::size_t slot = 0;
    for (int b = 0; b < grid.dim(); ++b) {
        if (b == face.axis) continue;
        slot = slot * static_cast<std::size_t>(grid.nodes()[static_cast<std::size_t>(b)]) +
               static_cast<std::size_t>(c[static_cast<std::size_t>(b)]);
    }
    return slot;
}

void check_state(const OperatorContext& ctx, const StateField& state, std::size_t m) {
    if (state.components() != m)
        throw ValidationError(strfmt("state has %zu components, expected %zu",
                                     state.components(), m));
    for (const auto& comp : state.comp)
        if (comp.size() != ctx.grid->num_nodes())
            throw ValidationError(strfmt("component has %zu nodes, grid has %zu",
                                         comp.size(), ctx.grid->num_nodes()));
}

} // namespace

OperatorContext make_context(const GrowthLaw& law, const Grid& grid, const std::vector<double>& d,
                             double t, FluxConvention flux) {
    if (law.dim() != grid.dim())
        throw ValidationError(strfmt("growth law is %d-dimensional, grid is %d-dimensional",
                                     law.dim(), grid.dim()));
    if (d.empty()) throw ValidationError("operator context needs at least one diffusivity");
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!(d[i] > 0.0))
            throw ValidationError(strfmt("diffusivity d%zu must be positive, got %g", i + 1, d[i]));
    OperatorContext ctx;
    ctx.law = &law;
    ctx.grid = &grid;
    ctx.d = d;
    ctx.t = t;
    ctx.flux = flux;
    ctx.lambda = law.scales(t);
    for (int k = 0; k < grid.dim(); ++k) {
        const double lam = ctx.lambda[static_cast<std::size_t>(k)];
        if (!(lam > 0.0) || !std::isfinite(lam))
            throw ValidationError(strfmt("scale %g on axis %d at t=%g is inadmissible", lam, k + 1, t));
        ctx.inv_lam_sq.push_back(1.0 / (lam * lam));
        const double h = grid.spacing(k);
        ctx.inv_h_sq.push_back(1.0 / (h * h));
    }
    ctx.a = law.dilution_rate(t);
    return ctx;
}

GhostValues close_boundary(const OperatorContext& ctx, const StateField& state,
                           const ReactionModel& model) {
    check_state(ctx, state, model.m);
    if (ctx.d.size() != model.m)
        throw ValidationError(strfmt("context has %zu diffusivities, model has %zu components",
                                     ctx.d.size(), model.m));
    const Grid& grid = *ctx.grid;
    const auto& faces = grid.faces();
    GhostValues ghosts;
    ghosts.values.assign(model.m, std::vector<std::vector<double>>(faces.size()));

    std::vector<double> z(model.m), gv(model.m);
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        const Face& face = faces[fi];
        const std::size_t k = static_cast<std::size_t>(face.axis);
        const double lam = ctx.lambda[k];
        const double step = 2.0 * grid.spacing(face.axis) * lam;
        // Mirror node: one step inside along the face axis.
        const std::ptrdiff_t into = face.side == 0 ? static_cast<std::ptrdiff_t>(grid.stride(face.axis))
                                                   : -static_cast<std::ptrdiff_t>(grid.stride(face.axis));
        for (std::size_t i = 0; i < model.m; ++i)
            ghosts.values[i][fi].resize(face.nodes.size());
        for (std::size_t n = 0; n < face.nodes.size(); ++n) {
            const std::size_t p = face.nodes[n];
            for (std::size_t i = 0; i < model.m; ++i) z[i] = state.comp[i][p];
            model.eval_g(z, gv);
            const std::size_t mirror = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + into);
            for (std::size_t i = 0; i < model.m; ++i) {
                const double scale = ctx.flux == FluxConvention::DScaled ? step / ctx.d[i] : step;
                ghosts.values[i][fi][n] = state.comp[i][mirror] + scale * gv[i];
            }
        }
    }
    return ghosts;
}

GhostValues close_boundary(const OperatorContext& ctx, const StateField& state,
                           const std::vector<std::vector<std::vector<double>>>& flux) {
    check_state(ctx, state, state.components());
    const Grid& grid = *ctx.grid;
    const auto& faces = grid.faces();
    const std::size_t m = state.components();
    if (flux.size() != m)
        throw ValidationError(strfmt("flux has %zu components, state has %zu", flux.size(), m));
    GhostValues ghosts;
    ghosts.values.assign(m, std::vector<std::vector<double>>(faces.size()));

    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        const Face& face = faces[fi];
        const double lam = ctx.lambda[static_cast<std::size_t>(face.axis)];
        const double step = 2.0 * grid.spacing(face.axis) * lam;
        const std::ptrdiff_t into = face.side == 0 ? static_cast<std::ptrdiff_t>(grid.stride(face.axis))
                                                   : -static_cast<std::ptrdiff_t>(grid.stride(face.axis));
        for (std::size_t i = 0; i < m; ++i) {
            if (flux[i].size() != faces.size() || flux[i][fi].size() != face.nodes.size())
                throw ValidationError("flux values do not match the face layout");
            const double di = i < ctx.d.size() ? ctx.d[i] : ctx.d.back();
            const double scale = ctx.flux == FluxConvention::DScaled ? step / di : step;
            auto& out = ghosts.values[i][fi];
            out.resize(face.nodes.size());
            for (std::size_t n = 0; n < face.nodes.size(); ++n) {
                const std::size_t p = face.nodes[n];
                const std::size_t mirror =
                    static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + into);
                out[n] = state.comp[i][mirror] + scale * flux[i][fi][n];
            }
        }
    }
    return ghosts;
}

void apply_L(const OperatorContext& ctx, std::span<const double> comp, std::size_t i,
             const GhostValues& ghosts, std::span<double> out) {
    const Grid& grid = *ctx.grid;
    if (comp.size() != grid.num_nodes() || out.size() != grid.num_nodes())
        throw ValidationError(strfmt("apply_L: field has %zu nodes, grid has %zu",
                                     comp.size(), grid.num_nodes()));
    if (i >= ctx.d.size())
        throw ValidationError(strfmt("apply_L: component %zu has no diffusivity", i + 1));
    if (!ghosts.has_component(i, grid.faces().size()))
        throw ValidationError(strfmt(
            "apply_L: ghost layer for component %zu is not initialized (close_boundary first)",
            i + 1));

    const double di = ctx.d[i];
    const double a = ctx.a;
    const int dim = grid.dim();
    const auto& nodes = grid.nodes();
    const auto& faces = grid.faces();

    parallel_for(grid.num_nodes(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const auto c = grid.coords(p);
            double lap = 0.0;
            for (int k = 0; k < dim; ++k) {
                const auto ik = static_cast<std::size_t>(k);
                const std::size_t stride = grid.stride(k);
                const double u = comp[p];
                double west, east;
                if (c[ik] > 0) {
                    west = comp[p - stride];
                } else {
                    const Face& face = faces[2 * ik];
                    west = ghosts.values[i][2 * ik][face_slot(grid, face, c)];
                }
                if (c[ik] < nodes[ik] - 1) {
                    east = comp[p + stride];
                } else {
                    const Face& face = faces[2 * ik + 1];
                    east = ghosts.values[i][2 * ik + 1][face_slot(grid, face, c)];
                }
                lap += ctx.inv_lam_sq[ik] * (west - 2.0 * u + east) * ctx.inv_h_sq[ik];
            }
            out[p] = di * lap - a * comp[p];
        }
    });
}

void apply_L_homogeneous(const OperatorContext& ctx, double di, std::span<const double> comp,
                         std::span<double> out) {
    const Grid& grid = *ctx.grid;
    if (comp.size() != grid.num_nodes() || out.size() != grid.num_nodes())
        throw ValidationError(strfmt("apply_L_homogeneous: field has %zu nodes, grid has %zu",
                                     comp.size(), grid.num_nodes()));
    const double a = ctx.a;
    const int dim = grid.dim();
    const auto& nodes = grid.nodes();

    parallel_for(grid.num_nodes(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const auto c = grid.coords(p);
            double lap = 0.0;
            for (int k = 0; k < dim; ++k) {
                const auto ik = static_cast<std::size_t>(k);
                const std::size_t stride = grid.stride(k);
                const double u = comp[p];
                // Zero-flux ghosts mirror the inner neighbor.
                const double west = c[ik] > 0 ? comp[p - stride] : comp[p + stride];
                const double east = c[ik] < nodes[ik] - 1 ? comp[p + stride] : comp[p - stride];
                lap += ctx.inv_lam_sq[ik] * (west - 2.0 * u + east) * ctx.inv_h_sq[ik];
            }
            out[p] = di * lap - a * comp[p];
        }
    });
}

double pushforward(const Grid& grid, const GrowthLaw& law, std::span<const double> comp, double t,
                   std::span<const double> y) {
    if (comp.size() != grid.num_nodes())
        throw ValidationError(strfmt("field has %zu nodes, grid has %zu",
                                     comp.size(), grid.num_nodes()));
    if (static_cast<int>(y.size()) != grid.dim())
        throw ValidationError(strfmt("point has %zu coordinates, grid is %d-dimensional",
                                     y.size(), grid.dim()));
    const auto lambda = law.scales(t);

    // Pull the physical point back to the reference box.
    int cell[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < grid.dim(); ++k) {
        const auto ik = static_cast<std::size_t>(k);
        const double x = y[ik] / lambda[ik];
        const double L = grid.extents()[ik];
        const double slack = 1e-12 * std::max(1.0, L);
        if (x < -slack || x > L + slack)
            throw RangeError(strfmt("point coordinate %g (axis %d) lies outside the domain "
                                    "[0, %g] at t=%g",
                                    y[ik], k + 1, L * lambda[ik], t));
        const double h = grid.spacing(k);
        const int last = grid.nodes()[ik] - 1;
        double s = std::clamp(x, 0.0, L) / h;
        int c = std::min(static_cast<int>(s), last - 1);
        cell[k] = c;
        frac[k] = std::clamp(s - c, 0.0, 1.0);
    }

    // Multilinear interpolation over the enclosing cell.
    double value = 0.0;
    const int corners = 1 << grid.dim();
    for (int corner = 0; corner < corners; ++corner) {
        double w = 1.0;
        int idx[3] = {0, 0, 0};
        for (int k = 0; k < grid.dim(); ++k) {
            const bool high = corner & (1 << k);
            idx[k] = cell[k] + (high ? 1 : 0);
            w *= high ? frac[k] : 1.0 - frac[k];
        }
        value += w * comp[grid.index(idx[0], idx[1], idx[2])];
    }
    return value;
}

double evolving_mass(const Grid& grid, const GrowthLaw& law, const StateField& state,
                     std::span<const double> b) {
    if (!b.empty() && b.size() != state.components())
        throw ValidationError(strfmt("weight vector has %zu entries, state has %zu components",
                                     b.size(), state.components()));
    double total = 0.0;
    for (std::size_t i = 0; i < state.components(); ++i) {
        const double bi = b.empty() ? 1.0 : b[i];
        total += bi * integrate_bulk(grid, state.comp[i]);
    }
    return law.volume_factor(state.t) * total;
}

} // namespace evodiff
