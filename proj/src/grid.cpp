#include "evodiff/grid.hpp"

#include <cmath>

#include "evodiff/common.hpp"

namespace evodiff {

Grid::Grid(const std::vector<double>& extents, const std::vector<int>& nodes) {
    if (extents.size() != nodes.size() || extents.empty() || extents.size() > 3)
        throw ValidationError(strfmt("grid needs matching extents/nodes for 1..3 axes "
                                     "(got %zu extents, %zu node counts)",
                                     extents.size(), nodes.size()));
    dim_ = static_cast<int>(extents.size());
    extents_ = extents;
    nodes_ = nodes;
    for (int a = 0; a < dim_; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        if (!(extents_[ia] > 0.0))
            throw ValidationError(strfmt("axis %d extent must be positive, got %g", a + 1, extents_[ia]));
        if (nodes_[ia] < 3)
            throw ValidationError(strfmt("axis %d needs at least 3 nodes, got %d", a + 1, nodes_[ia]));
        spacing_.push_back(extents_[ia] / (nodes_[ia] - 1));
    }

    total_ = 1;
    for (int a = 0; a < dim_; ++a) total_ *= nx(a);
    stride_.assign(static_cast<std::size_t>(dim_), 1);
    for (int a = dim_ - 2; a >= 0; --a)
        stride_[static_cast<std::size_t>(a)] = stride_[static_cast<std::size_t>(a + 1)] * nx(a + 1);

    // Tensor-product trapezoid weights over the bulk.
    auto axis_weight = [&](int a, int i) {
        const int n = nodes_[static_cast<std::size_t>(a)];
        return spacing_[static_cast<std::size_t>(a)] * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    };
    weights_.resize(total_);
    for (std::size_t p = 0; p < total_; ++p) {
        const auto c = coords(p);
        double w = 1.0;
        for (int a = 0; a < dim_; ++a) w *= axis_weight(a, c[static_cast<std::size_t>(a)]);
        weights_[p] = w;
    }

    // Boundary faces with (n-1)-dimensional trapezoid weights.
    for (int a = 0; a < dim_; ++a) {
        for (int side = 0; side < 2; ++side) {
            Face f;
            f.axis = a;
            f.side = side;
            const int pinned = side == 0 ? 0 : nodes_[static_cast<std::size_t>(a)] - 1;
            int idx[3] = {0, 0, 0};
            idx[a] = pinned;
            // Row-major sweep over the remaining axes.
            std::vector<int> rest;
            for (int b = 0; b < dim_; ++b)
                if (b != a) rest.push_back(b);
            std::vector<int> counter(rest.size(), 0);
            for (;;) {
                for (std::size_t r = 0; r < rest.size(); ++r) idx[rest[r]] = counter[r];
                f.nodes.push_back(index(idx[0], idx[1], idx[2]));
                double w = 1.0;
                for (std::size_t r = 0; r < rest.size(); ++r) w *= axis_weight(rest[r], counter[r]);
                f.weights.push_back(w);
                // advance the counter (last axis fastest)
                std::size_t r = rest.size();
                while (r > 0) {
                    --r;
                    if (++counter[r] < nodes_[static_cast<std::size_t>(rest[r])]) break;
                    counter[r] = 0;
                    if (r == 0) goto face_done;
                }
                if (rest.empty()) break;
            }
        face_done:
            faces_.push_back(std::move(f));
        }
    }
}

std::array<int, 3> Grid::coords(std::size_t flat) const {
    std::array<int, 3> c = {0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
        c[static_cast<std::size_t>(a)] = static_cast<int>(flat % nx(a));
        flat /= nx(a);
    }
    return c;
}

std::array<double, 3> Grid::position(std::size_t flat) const {
    const auto c = coords(flat);
    std::array<double, 3> x = {0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a)
        x[static_cast<std::size_t>(a)] =
            spacing_[static_cast<std::size_t>(a)] * c[static_cast<std::size_t>(a)];
    return x;
}

bool Grid::on_boundary(std::size_t flat) const {
    const auto c = coords(flat);
    for (int a = 0; a < dim_; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        if (c[ia] == 0 || c[ia] == nodes_[ia] - 1) return true;
    }
    return false;
}

double Grid::volume() const {
    double v = 1.0;
    for (double L : extents_) v *= L;
    return v;
}

double Grid::surface_area() const {
    double area = 0.0;
    for (int a = 0; a < dim_; ++a) {
        double face = 1.0;
        for (int b = 0; b < dim_; ++b)
            if (b != a) face *= extents_[static_cast<std::size_t>(b)];
        area += 2.0 * face;
    }
    return area;
}

double integrate_bulk(const Grid& grid, std::span<const double> field) {
    if (field.size() != grid.num_nodes())
        throw ValidationError(strfmt("field has %zu entries, grid has %zu nodes",
                                     field.size(), grid.num_nodes()));
    double sum = 0.0;
    const auto& w = grid.weights();
    for (std::size_t p = 0; p < field.size(); ++p) sum += w[p] * field[p];
    return sum;
}

double integrate_boundary(const Grid& grid, std::span<const double> field) {
    if (field.size() != grid.num_nodes())
        throw ValidationError(strfmt("field has %zu entries, grid has %zu nodes",
                                     field.size(), grid.num_nodes()));
    double sum = 0.0;
    for (const Face& f : grid.faces())
        for (std::size_t k = 0; k < f.nodes.size(); ++k) sum += f.weights[k] * field[f.nodes[k]];
    return sum;
}

double integrate_boundary_trace(const Grid& grid, const std::vector<std::vector<double>>& values) {
    const auto& faces = grid.faces();
    if (values.size() != faces.size())
        throw ValidationError(strfmt("trace has %zu faces, grid has %zu", values.size(), faces.size()));
    double sum = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f) {
        if (values[f].size() != faces[f].nodes.size())
            throw ValidationError(strfmt("face %zu trace has %zu entries, expected %zu",
                                         f, values[f].size(), faces[f].nodes.size()));
        for (std::size_t k = 0; k < values[f].size(); ++k)
            sum += faces[f].weights[k] * values[f][k];
    }
    return sum;
}

std::vector<std::vector<double>> boundary_trace(const Grid& grid, std::span<const double> field) {
    if (field.size() != grid.num_nodes())
        throw ValidationError(strfmt("field has %zu entries, grid has %zu nodes",
                                     field.size(), grid.num_nodes()));
    std::vector<std::vector<double>> out;
    out.reserve(grid.faces().size());
    for (const Face& f : grid.faces()) {
        std::vector<double> vals(f.nodes.size());
        for (std::size_t k = 0; k < f.nodes.size(); ++k) vals[k] = field[f.nodes[k]];
        out.push_back(std::move(vals));
    }
    return out;
}

} // namespace evodiff
