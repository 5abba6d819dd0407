#pragma once
// Uniform tensor grids and sampled fields.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace achart {

/// Uniform tensor-product grid: point i along axis d sits at origin[d] + i*spacing[d].
struct GridGeometry {
    std::vector<int> extents;
    std::vector<double> spacing;
    std::vector<double> origin;

    int dim() const { return static_cast<int>(extents.size()); }
    std::size_t size() const;
    /// Row-major multi-index (last axis fastest).
    void unravel(std::size_t flat, int* idx) const;
    std::size_t ravel(const int* idx) const;
    void point(std::size_t flat, double* x) const;
    std::vector<double> point(std::size_t flat) const;
    /// Stride of axis d in the flat index.
    std::size_t stride(int d) const;

    /// Cell-centred grid over the cube [c-r, c+r]^n with `cells` cells per axis.
    /// Points sit at cell centres, so 0 is avoided when c=0 and cells is even.
    static GridGeometry cell_centred(const std::vector<double>& centre, double radius, int cells);
    /// Grid over the periodic box whose points are symmetric about `centre` and include it.
    /// `count` points per axis spread over a period of `side`.
    static GridGeometry periodic_centred(int n, double side, int count);

    bool operator==(const GridGeometry&) const = default;
};

/// Samples of a scalar, vector or matrix function on a grid.
/// Storage is component-major: values[c * size() + p].
struct GridField {
    GridGeometry geom;
    int rank = 0;                 // 0 scalar, 1 vector, 2 matrix
    std::vector<int> comp_shape;  // {}, {k} or {r, c}
    int boundary_margin = 0;      // cells reserved for cutoff / stencils
    std::vector<double> values;

    GridField() = default;
    GridField(GridGeometry g, std::vector<int> shape);

    int ncomp() const;
    std::size_t npoints() const { return geom.size(); }
    double* comp(int c) { return values.data() + static_cast<std::size_t>(c) * npoints(); }
    const double* comp(int c) const { return values.data() + static_cast<std::size_t>(c) * npoints(); }
    double& at(int c, std::size_t p) { return values[static_cast<std::size_t>(c) * npoints() + p]; }
    double at(int c, std::size_t p) const { return values[static_cast<std::size_t>(c) * npoints() + p]; }
    /// Matrix entry (i, j) for rank-2 fields.
    int mat_index(int i, int j) const { return i * comp_shape[1] + j; }

    /// Extract one component as a scalar field.
    GridField component(int c) const;
    void check_consistent() const;
};

}  // namespace achart
