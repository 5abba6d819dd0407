#pragma once
// Embedded Dormand-Prince 5(4) integrator with adaptive steps.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace achart {

struct OdeOptions {
    double tol = 1e-10;         // absolute per-step error bound (max norm)
    double h_init = 0.0;        // 0 picks 1/16 of the interval
    double h_min_rel = 1e-12;   // steps below this fraction of the interval fail
    std::size_t max_steps = 200000;
    bool record = false;        // keep every accepted state
};

using OdeRhs = std::function<void(double t, const double* y, double* dy)>;
/// Returns true while the state is admissible.
using OdeInside = std::function<bool(const double* y)>;

struct OdeResult {
    std::vector<double> y;  // final state (last admissible state on exit or failure)
    double t = 0.0;         // time reached
    bool exited = false;
    bool failed = false;
    std::string reason;
    std::size_t steps = 0;
    std::size_t rejected = 0;
    double error_estimate = 0.0;  // sum of accepted local error estimates
    std::vector<double> ts;
    std::vector<std::vector<double>> ys;

    bool ok() const { return !exited && !failed; }
};

OdeResult integrate(const OdeRhs& f, std::vector<double> y0, double t0, double t1, const OdeOptions& opt,
                    const OdeInside& inside = nullptr);

}  // namespace achart
