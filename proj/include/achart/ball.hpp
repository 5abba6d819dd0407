#pragma once
// Monte Carlo estimates of control-ball volumes.

#include <cstdint>
#include <string>
#include <vector>

#include "achart/fieldspec.hpp"
#include "achart/grid.hpp"

namespace achart {

struct BallConfig {
    int grid = 64;                  // cells per axis
    std::size_t samples = 100000;
    int pieces = 8;                 // piecewise constant control pieces
    double constant_fraction = 0.5; // share of samples with a single constant control
    std::size_t pilot = 4000;       // samples used to size the window
    double window_pad = 0.05;       // relative padding of the pilot bounding box
    double tol = 1e-9;
    std::uint64_t seed = 1;
};

struct BallEstimate {
    std::vector<double> center;
    double delta = 0.0;
    std::string method = "control-mc";
    GridGeometry window;           // cell-centre grid of the binning window
    std::vector<char> hit_mask;    // per cell
    std::size_t hit_cells = 0;
    double cell_volume = 0.0;
    double volume = 0.0;
    std::size_t samples = 0;
    std::size_t in_window = 0;     // successful endpoints inside the window
    std::size_t failed = 0;        // flows that left the domain or failed
    double hit_fraction = 0.0;
    double wilson_lo = 0.0, wilson_hi = 0.0;
    int pieces = 0;
    bool degenerate = false;
};

/// 95% Wilson score interval for k successes in n trials.
void wilson_interval(std::size_t k, std::size_t n, double& lo, double& hi);

/// Endpoint of sample `index`: controls drawn from stream(seed, index), flow scaled by delta.
/// Returns false if the flow does not finish inside the domain.
bool ball_sample(const FieldSet& fields, const std::vector<double>& x0, double delta, const BallConfig& cfg,
                 std::uint64_t index, std::vector<double>& end);

/// Bounding box of pilot samples padded by cfg.window_pad, as [lo, hi].
void ball_window(const FieldSet& fields, const std::vector<double>& x0, double delta, const BallConfig& cfg,
                 std::vector<double>& lo, std::vector<double>& hi);

/// Volume over a fixed window [lo, hi].
BallEstimate cc_ball_volume_in(const FieldSet& fields, const std::vector<double>& x0, double delta,
                               const std::vector<double>& lo, const std::vector<double>& hi, const BallConfig& cfg);

/// Volume with the window chosen from a pilot run.
BallEstimate cc_ball_volume(const FieldSet& fields, const std::vector<double>& x0, double delta,
                            const BallConfig& cfg = {});

/// Nested radii on one shared window. Each mask is OR-ed with the masks of all
/// smaller radii, so volumes are nondecreasing in delta.
std::vector<BallEstimate> cc_ball_volume_sweep(const FieldSet& fields, const std::vector<double>& x0,
                                               std::vector<double> deltas, const BallConfig& cfg = {});

}  // namespace achart
