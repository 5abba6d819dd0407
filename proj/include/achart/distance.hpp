#pragma once
// Upper bounds on the control distance from shortest paths over a net of
// short constant-control hops.

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "achart/fieldspec.hpp"
#include "achart/flows.hpp"

namespace achart {

struct DistanceConfig {
    int nodes_per_axis = 24;
    int stencil = 0;        // neighbour radius in cells, 0 picks 4 in 2D and 2 otherwise
    double margin = 0.25;   // net box half-width is (1 + 2*margin) * |x - y|_inf / 2
    int levels = 1;         // net refinements (N-1)*2^l + 1, l < levels
    double tol = 1e-10;     // flow tolerance
    int shoot_iters = 30;
    double shoot_tol = 1e-9;  // endpoint residual relative to hop length
    double max_delta = std::numeric_limits<double>::infinity();  // longer hops are dropped
};

/// Constant control b with exp(b . X) u = v, found by a frozen-Jacobian
/// Newton iteration from the minimal-norm linear guess.
std::optional<std::vector<double>> shoot(const FieldSet& fields, const std::vector<double>& u,
                                         const std::vector<double>& v, const Domain& U, const DistanceConfig& cfg);

/// Undirected weighted graph; weight = |b| of the connecting hop.
struct DistanceGraph {
    std::vector<std::vector<double>> nodes;
    std::vector<std::vector<std::pair<int, double>>> adj;

    std::size_t edge_count() const;
    /// Shortest-path lengths from src (infinity where unreachable).
    std::vector<double> shortest(int src) const;
};

/// Net over the box [lo, hi] with `per_axis` nodes per axis, plus `extra` points.
/// Nodes outside the field domain are skipped. Extra points get indices 0..extra.size()-1.
DistanceGraph build_distance_graph(const FieldSet& fields, const std::vector<double>& lo,
                                   const std::vector<double>& hi, int per_axis,
                                   const std::vector<std::vector<double>>& extra, const DistanceConfig& cfg);

struct DistanceResult {
    double value = std::numeric_limits<double>::infinity();  // upper bound
    bool disconnected = false;
    std::vector<double> level_values;
    double refinement_gap = 0.0;  // value change between the last two levels
    double dyadic_lo = 0.0, dyadic_hi = 0.0;  // value lies in [lo, hi), hi = 2 lo
    std::size_t edges = 0;
    std::string note;
};

DistanceResult cc_distance(const FieldSet& fields, const std::vector<double>& x, const std::vector<double>& y,
                           const DistanceConfig& cfg = {});

}  // namespace achart
