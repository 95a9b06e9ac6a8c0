#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace evodiff {

/// One boundary face of the reference box: all nodes whose index along
/// `axis` is pinned to 0 (side 0, outward normal -e_axis) or N_axis - 1
/// (side 1, normal +e_axis).  Nodes are listed row-major over the remaining
/// axes; `weights` are the matching (n-1)-dimensional trapezoid weights, so
/// edge/corner nodes shared between faces contribute to each face with the
/// half/quarter weight the trapezoid rule assigns there.
struct Face {
    int axis = 0;
    int side = 0;
    std::vector<std::size_t> nodes;
    std::vector<double> weights;
};

/// Axis-aligned reference box [0,L_1] x ... x [0,L_n] (n = 1..3) with N_i
/// nodes per axis (N_i >= 3) and tensor-product trapezoid quadrature.
/// Fields are flat arrays in row-major order (axis 0 slowest).
class Grid {
public:
    Grid(const std::vector<double>& extents, const std::vector<int>& nodes);

    int dim() const { return dim_; }
    std::size_t num_nodes() const { return total_; }
    const std::vector<double>& extents() const { return extents_; }
    const std::vector<int>& nodes() const { return nodes_; }
    double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
    std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

    std::size_t index(int i, int j = 0, int k = 0) const {
        return (static_cast<std::size_t>(i) * nx(1) + static_cast<std::size_t>(j)) * nx(2) +
               static_cast<std::size_t>(k);
    }
    std::array<int, 3> coords(std::size_t flat) const;
    std::array<double, 3> position(std::size_t flat) const;

    /// Bulk quadrature weight of a node (product of per-axis trapezoid
    /// weights; sums exactly to the box volume).
    double weight(std::size_t flat) const { return weights_[flat]; }
    const std::vector<double>& weights() const { return weights_; }

    const std::vector<Face>& faces() const { return faces_; }
    bool on_boundary(std::size_t flat) const;

    double volume() const;
    double surface_area() const;

private:
    std::size_t nx(int axis) const {
        return axis < dim_ ? static_cast<std::size_t>(nodes_[static_cast<std::size_t>(axis)]) : 1;
    }

    int dim_ = 1;
    std::size_t total_ = 0;
    std::vector<double> extents_;
    std::vector<int> nodes_;
    std::vector<double> spacing_;
    std::vector<std::size_t> stride_;
    std::vector<double> weights_;
    std::vector<Face> faces_;
};

/// Time-stamped multi-component nodal data on a Grid.
struct StateField {
    double t = 0.0;
    std::vector<std::vector<double>> comp; // [component][node]

    StateField() = default;
    StateField(std::size_t m, std::size_t nodes, double time = 0.0)
        : t(time), comp(m, std::vector<double>(nodes, 0.0)) {}
    std::size_t components() const { return comp.size(); }
};

/// Trapezoid integral of a nodal field over the reference box.
double integrate_bulk(const Grid& grid, std::span<const double> field);

/// Trapezoid integral of the boundary trace of a nodal field over the
/// reference boundary (all faces; shared edge nodes enter via each face's
/// own weights).  In 1-D the boundary integral is the two-point sum.
double integrate_boundary(const Grid& grid, std::span<const double> field);

/// Per-face integral of explicit trace values (values[f] aligned with
/// grid.faces()[f].nodes), summed over faces.
double integrate_boundary_trace(const Grid& grid,
                                const std::vector<std::vector<double>>& values);

/// Restriction of a nodal field to each boundary face (face node order).
std::vector<std::vector<double>> boundary_trace(const Grid& grid, std::span<const double> field);

} // namespace evodiff
