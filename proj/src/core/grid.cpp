#include "achart/grid.hpp"

#include <cmath>

namespace achart {

std::size_t GridGeometry::size() const {
    std::size_t s = 1;
    for (int e : extents) s *= static_cast<std::size_t>(e);
    return s;
}

std::size_t GridGeometry::stride(int d) const {
    std::size_t s = 1;
    for (int k = dim() - 1; k > d; --k) s *= static_cast<std::size_t>(extents[k]);
    return s;
}

void GridGeometry::unravel(std::size_t flat, int* idx) const {
    for (int d = dim() - 1; d >= 0; --d) {
        idx[d] = static_cast<int>(flat % static_cast<std::size_t>(extents[d]));
        flat /= static_cast<std::size_t>(extents[d]);
    }
}

std::size_t GridGeometry::ravel(const int* idx) const {
    std::size_t flat = 0;
    for (int d = 0; d < dim(); ++d) flat = flat * static_cast<std::size_t>(extents[d]) + static_cast<std::size_t>(idx[d]);
    return flat;
}

void GridGeometry::point(std::size_t flat, double* x) const {
    for (int d = dim() - 1; d >= 0; --d) {
        int i = static_cast<int>(flat % static_cast<std::size_t>(extents[d]));
        flat /= static_cast<std::size_t>(extents[d]);
        x[d] = origin[d] + i * spacing[d];
    }
}

std::vector<double> GridGeometry::point(std::size_t flat) const {
    std::vector<double> x(dim());
    point(flat, x.data());
    return x;
}

GridGeometry GridGeometry::cell_centred(const std::vector<double>& centre, double radius, int cells) {
    if (cells < 1 || radius <= 0) throw std::invalid_argument("cell_centred: bad size");
    GridGeometry g;
    const int n = static_cast<int>(centre.size());
    const double h = 2.0 * radius / cells;
    g.extents.assign(n, cells);
    g.spacing.assign(n, h);
    g.origin.resize(n);
    for (int d = 0; d < n; ++d) g.origin[d] = centre[d] - radius + 0.5 * h;
    return g;
}

GridGeometry GridGeometry::periodic_centred(int n, double side, int count) {
    if (count < 2 || side <= 0) throw std::invalid_argument("periodic_centred: bad size");
    GridGeometry g;
    const double h = side / count;
    g.extents.assign(n, count);
    g.spacing.assign(n, h);
    g.origin.assign(n, -static_cast<double>(count / 2) * h);
    return g;
}

GridField::GridField(GridGeometry g, std::vector<int> shape)
    : geom(std::move(g)), rank(static_cast<int>(shape.size())), comp_shape(std::move(shape)) {
    values.assign(static_cast<std::size_t>(ncomp()) * npoints(), 0.0);
}

int GridField::ncomp() const {
    int c = 1;
    for (int s : comp_shape) c *= s;
    return c;
}

GridField GridField::component(int c) const {
    GridField out(geom, {});
    const double* src = comp(c);
    std::copy(src, src + npoints(), out.values.begin());
    return out;
}

void GridField::check_consistent() const {
    if (rank != static_cast<int>(comp_shape.size())) throw std::runtime_error("GridField: rank/shape mismatch");
    if (static_cast<int>(geom.spacing.size()) != geom.dim() || static_cast<int>(geom.origin.size()) != geom.dim())
        throw std::runtime_error("GridField: geometry arrays inconsistent");
    if (values.size() != static_cast<std::size_t>(ncomp()) * npoints())
        throw std::runtime_error("GridField: value count does not match shape");
}

}  // namespace achart
