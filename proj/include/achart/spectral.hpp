#pragma once
// Fourier calculus on periodic grids, smooth cutoffs and local interpolation.

#include <complex>
#include <memory>
#include <vector>

#include "achart/grid.hpp"

namespace achart {

/// Spectral derivatives on a periodic grid whose period is extents * spacing per axis.
/// Even extents carry a Nyquist mode; first derivatives set it to zero, second
/// derivatives keep it, so odd extents are preferred for exact identities.
class Spectral {
public:
    explicit Spectral(const GridGeometry& g);
    ~Spectral();
    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    const GridGeometry& geometry() const;
    std::size_t size() const;

    void derivative(const double* in, int axis, double* out) const;
    /// out[d] receives the derivative along axis d (one forward transform).
    void gradient(const double* in, const std::vector<double*>& out) const;
    void second_derivative(const double* in, int a, int b, double* out) const;
    void laplacian(const double* in, double* out) const;
    /// Solves lap(out) = in - mean(in) with mean(out) = 0. Returns mean(in).
    double solve_poisson(const double* in, double* out) const;
    /// Trigonometric interpolant sampled on a grid `factor` times finer, same origin and period.
    std::vector<double> upsample(const double* in, int factor) const;
    GridGeometry upsampled_geometry(int factor) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Compact: C-infinity quotient of exp(-1/x) terms.
/// Erf: rescaled error function; its derivative jumps by about 1e-6 at the ends,
/// and its Fourier tail is far smaller on coarse grids.
enum class StepProfile { Compact, Erf };

/// 0 for x <= 0, 1 for x >= 1, smooth in between.
double smooth_step(double x, StepProfile profile = StepProfile::Compact);
double smooth_step_derivative(double x, StepProfile profile = StepProfile::Compact);
/// 1 for |x| <= r_in, 0 for |x| >= r_out, smooth radial transition.
double radial_cutoff(const double* x, int n, double r_in, double r_out, StepProfile profile = StepProfile::Compact);
void radial_cutoff_gradient(const double* x, int n, double r_in, double r_out, double* g,
                            StepProfile profile = StepProfile::Compact);

/// Tensor Lagrange interpolation with a 6-point stencil per axis on a periodic grid.
class PeriodicInterpolator {
public:
    PeriodicInterpolator() = default;
    /// values holds ncomp component blocks of geom.size() samples each.
    PeriodicInterpolator(GridGeometry geom, std::vector<double> values, int ncomp);
    int ncomp() const { return ncomp_; }
    const GridGeometry& geometry() const { return geom_; }
    /// out[c] for c in [0, ncomp).
    void eval(const double* x, double* out) const;

private:
    GridGeometry geom_;
    std::vector<double> values_;
    int ncomp_ = 0;
};

}  // namespace achart
