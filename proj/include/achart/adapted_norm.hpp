#pragma once
// Lower-bound estimates of norms measured along flows of a field family.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "achart/distance.hpp"
#include "achart/fieldspec.hpp"

namespace achart {

using ScalarFn = std::function<double(const double*)>;
using RegionFn = std::function<bool(const double*)>;

struct AdaptedConfig {
    double s = 1.0;
    std::vector<std::vector<double>> base_points;
    RegionFn region;                 // paths must stay inside; null means the field domain
    std::vector<double> scales = {0.25, 0.125, 0.0625};
    bool linear_controls = false;    // add d(t) = alpha + beta t paths
    double linear_kappa = 0.5;       // share of the constraint spent on the slope
    std::size_t max_pairs = 20000;   // shot pairs for the Holder part
    std::uint64_t seed = 1;
    double tol = 1e-11;              // flow tolerance
    double shoot_tol = 1e-12;
    double flow_step = 1e-4;         // step for flow differences when f is not symbolic
};

struct AdaptedScale {
    double h = 0.0;
    double seminorm = 0.0;
    std::size_t paths = 0;
};

struct AdaptedNormEstimate {
    double value = 0.0;  // lower bound
    double sup_term = 0.0;
    double holder_term = 0.0;
    double second_diff_term = 0.0;
    std::string path_family;
    std::vector<AdaptedScale> per_scale;
    std::size_t paths = 0;
    std::size_t failed_flows = 0;
    std::size_t paths_outside = 0;  // paths leaving the region, skipped
    std::size_t holder_pairs = 0;
    std::size_t failed_shots = 0;
};

/// Unit control directions: +-e_j and (+-e_i +- e_j)/sqrt(2). The two-field
/// directions are run over sqrt(2) times the nominal scale.
std::vector<std::vector<double>> control_directions(int q);

/// Ordered multi-indices over {0..q-1} of length <= m, shortest first.
std::vector<std::vector<int>> ordered_multi_indices(int q, int m);

/// X_j f = sum_k X_j^k d_k f, symbolic.
FieldExpr apply_field(const FieldSet& fields, int j, const FieldExpr& f);

AdaptedNormEstimate x_adapted_zygmund(const FieldSet& fields, const FieldExpr& f, const AdaptedConfig& cfg);
AdaptedNormEstimate x_adapted_zygmund(const FieldSet& fields, const ScalarFn& f, const AdaptedConfig& cfg);

/// Lattice points centre + i*h with |i| <= half_cells that lie in the closed ball.
std::vector<std::vector<double>> lattice_points_in_ball(const std::vector<double>& centre, double radius,
                                                        int half_cells);

}  // namespace achart
