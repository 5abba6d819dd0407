#pragma once
// Exponential maps of control-weighted field combinations.

#include <functional>
#include <string>
#include <vector>

#include "achart/fieldspec.hpp"
#include "achart/integrator.hpp"

namespace achart {

struct FlowOptions {
    double tol = 1e-10;
    bool record = true;
    std::size_t max_steps = 200000;
};

/// Integral curve E(r) of E' = sum_j a_j(r) X_j(E), E(0) = x0.
struct FlowTrace {
    std::vector<double> x0;
    std::vector<double> controls;  // constant controls, empty for time-dependent ones
    std::vector<double> r;
    std::vector<std::vector<double>> points;
    std::vector<double> end;  // E(r_end), or the last admissible point
    double r_reached = 0.0;
    bool exited = false;
    bool failed = false;
    std::string reason;
    std::size_t step_count = 0;
    double error_estimate = 0.0;

    bool ok() const { return !exited && !failed; }
};

/// Controls as a function of time: a(r) written into out[0..q).
using ControlFn = std::function<void(double r, double* out)>;

FlowTrace exp_map(const FieldSet& fields, const std::vector<double>& a, const std::vector<double>& x0,
                  const Domain& U, const FlowOptions& opt = {}, double r_end = 1.0);
FlowTrace exp_map(const FieldSet& fields, const ControlFn& a, const std::vector<double>& x0, const Domain& U,
                  const FlowOptions& opt = {}, double r_end = 1.0);
/// Piecewise constant controls: pieces[i] acts on [i/m, (i+1)/m), scaled by `scale`.
FlowTrace exp_map_piecewise(const FieldSet& fields, const std::vector<std::vector<double>>& pieces, double scale,
                            const std::vector<double>& x0, const Domain& U, const FlowOptions& opt = {});

/// Controls t placed at the J0 slots, zero elsewhere.
std::vector<double> embed_controls(int q, const std::vector<int>& J0, const double* t);

/// exp(t . X_J0) x0. Throws FlowError when the flow leaves U or fails.
std::vector<double> phi0(const FieldSet& fields, const std::vector<int>& J0, const std::vector<double>& x0,
                         const double* t, const Domain& U, double tol = 1e-10);

struct Phi0Jet {
    std::vector<double> x;    // Phi0(t)
    std::vector<double> dx;   // dPhi0(t), row-major dx[k*n + l] = d x_k / d t_l
    bool ok = false;
    std::string reason;
};

/// Phi0 and its derivative in t from the variational equations.
Phi0Jet phi0_jet(const FieldSet& fields, const std::vector<int>& J0, const std::vector<double>& x0, const double* t,
                 const Domain& U, double tol = 1e-10);

class FlowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace achart
