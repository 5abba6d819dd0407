#pragma once
// Grid estimators for Euclidean Zygmund and Holder norms on a ball.

#include <cstdint>
#include <string>
#include <vector>

#include "achart/fieldspec.hpp"
#include "achart/grid.hpp"

namespace achart {

struct ZygmundConfig {
    double s = 1.0;                  // order, split as m + sigma with sigma in (0, 1]
    std::vector<double> center;      // empty means the origin
    double radius = 1.0;
    int k_min = 2;                   // scales h = radius * 2^-k, k_min <= k <= k_max
    int k_max = 0;                   // 0: finest scale with at least 4 cells per h
    std::vector<double> scales;      // explicit scales, rounded to lattice multiples; overrides k range
    std::size_t max_pairs = 1000000; // Holder pairs beyond this are subsampled
    std::uint64_t seed = 1;
    double noise = 0.0;              // absolute sample noise; 0 assumes rounding-level samples
    int lattice_cells = 0;           // FieldExpr inputs: half-width in cells, 0 picks 4 * 2^k_max
    bool fit_all_orders = false;     // also fit exponents of the lower layers
};

struct ScaleEntry {
    double h = 0.0;
    double seminorm = 0.0;      // max over layers of sup |second difference| / |h|^sigma
    double top_sup = 0.0;       // sup |second difference| of the order-m layer (no division)
    bool used_in_fit = false;
};

struct LayerTerm {
    std::vector<int> alpha;     // derivative counts per axis
    double sup = 0.0;
    double holder = 0.0;        // Holder quotient sup with exponent sigma/2
    double second_diff = 0.0;   // sup over scales of the normalised second difference
};

struct ZygmundReport {
    double s = 0.0;
    int m = 0;
    double sigma = 0.0;
    std::vector<ScaleEntry> per_scale;
    std::vector<LayerTerm> layers;
    double sup_term = 0.0;          // sum over layers of sup norms
    double holder_half_term = 0.0;  // sum over layers of Holder-(sigma/2) parts including sup
    double second_diff_term = 0.0;
    double norm = 0.0;
    double fitted_exponent = 0.0;
    bool resolved_smooth = false;   // too few scales above the noise floor; exponent set to the cap m + 2
    int scales_used = 0;
    double noise_floor = 0.0;
    std::size_t holder_pairs = 0;
    std::vector<ZygmundReport> components;  // filled for multi-component fields
};

/// Lattice centre + i*h, |i| <= half_cells per axis, h = radius / half_cells.
GridGeometry ball_lattice(const std::vector<double>& centre, double radius, int half_cells);

GridField sample_expr(const FieldExpr& f, const GridGeometry& g);

/// Fourth-order finite difference along an axis (one-sided near the lattice edge).
GridField fd_derivative(const GridField& f, int axis);

/// Lattice-multiple scales per the config for a lattice of the given spacing.
std::vector<int> scale_cells(const ZygmundConfig& cfg, double spacing);

/// Norm estimate for a sampled field. Multi-component fields report the largest
/// norm and the smallest fitted exponent over components.
ZygmundReport zygmund_norm(const GridField& f, const ZygmundConfig& cfg);
/// Norm estimate with symbolic derivatives sampled exactly on a lattice.
ZygmundReport zygmund_norm(const FieldExpr& f, int n, const ZygmundConfig& cfg);

/// sum_{|alpha| <= m} (sup |d^alpha f| + sup |d^alpha f(x) - d^alpha f(y)| / |x - y|^s).
double holder_norm(const GridField& f, int m, double s, const ZygmundConfig& cfg);
double holder_norm(const FieldExpr& f, int n, int m, double s, const ZygmundConfig& cfg);

/// Split s into m + sigma with sigma in (0, 1].
void split_order(double s, int& m, double& sigma);

/// All multi-indices (per-axis counts) with total order <= m, lowest order first.
std::vector<std::vector<int>> multi_indices(int n, int m);

}  // namespace achart
