#pragma once
// Densities w * Lebesgue in ambient coordinates, their pullbacks through an
// adapted chart and ball-volume comparisons.

#include <string>
#include <vector>

#include "achart/adapted.hpp"
#include "achart/ball.hpp"
#include "achart/fieldspec.hpp"
#include "achart/vectorfield.hpp"

namespace achart {

/// nu(Z_1, ..., Z_n)(x) = w(x) |det Z(x)|, with Z[j*n + k] the k-th component of Z_j.
double density_eval(const FieldExpr& weight, const double* Z, int n, const double* x);

/// |wedge Z / wedge X_J0| at p. Throws std::domain_error when X_J0 is singular at p.
double nu0_eval(const FieldSet& fields, const std::vector<int>& J0, const std::vector<Field>& Z, const double* p);

/// f_j = div(w X_j) / w, symbolic, so that the Lie derivative of w * Lebesgue along X_j is f_j times it.
std::vector<FieldExpr> divergence_rates(const FieldSet& fields, const FieldExpr& weight);

struct DensityConfig {
    double s = 1.5;            // Zygmund order for the regularity fit of h
    double fd_step = 1e-5;     // step for the finite-difference Jacobian check
    int k_min = 1;             // coarsest scale of the fit is 2^-k_min
};

struct VolumeTable {
    double xi2 = 0.0;
    double nu_ball_j0 = 0.0;   // nu(B_XJ0(x0, xi2))
    double nu_ball_x = 0.0;    // nu(B_X(x0, xi2))
    double nu_frame = 0.0;     // nu(X_1, ..., X_n)(x0)
    double max_wedge = 0.0;    // max over increasing n-tuples of |nu(X_J)(x0)|
    double ratio_j0_x = 0.0;       // nu_ball_j0 / nu_ball_x
    double ratio_x_frame = 0.0;    // nu_ball_x / nu_frame
    double ratio_x_max_wedge = 0.0;
    double frame_over_max = 0.0;   // nu_frame / max_wedge
    BallEstimate ball_j0, ball_x;
    bool degenerate = false;
};

struct DensityReport {
    GridGeometry lattice;        // the chart lattice on B(1)
    std::vector<char> inside;
    GridField h;                 // w(Phi) |det dPhi|
    GridField h0;                // 1 / det(K (I + A_final))
    GridField g_ratio;           // h / h0, equal to g o Phi
    double h0_identity_residual = 0.0;  // sup |h0 det(K (I + A_final)) - 1|
    double h_jacobian_residual = 0.0;   // sup |h - w(Phi) |det of the finite-difference dPhi||, relative
    double g_residual = 0.0;            // sup |h / h0 - g o Phi| relative to sup |g o Phi|
    double g_x0 = 0.0;                  // g(x0) = w(x0) |det X_J0(x0)|
    double g_from_chart = 0.0;          // h(0) / h0(0)
    double nu_frame = 0.0;              // nu(X_1, ..., X_n)(x0)
    bool sign_constant = false;
    bool vanishing = false;      // w o Phi is zero on the whole ball; g_ratio is then undefined
    double h_exponent = 0.0;     // NaN when the lattice is too coarse for a fit
    double h_norm = 0.0;
    std::vector<std::string> f_j;    // divergence rates as text
    std::vector<double> f_j_sup;     // sup |f_j| on the sampled image
};

DensityReport pullback_density(const AdaptedChart& chart, const FieldExpr& weight, const DensityConfig& cfg = {});

/// Weighted Monte Carlo masses of B_XJ0(x0, xi2) and B_X(x0, xi2) with the frame values at x0.
/// Requires chart.radii.xi2 > 0 (run verify_theorem first).
VolumeTable volume_compare(const AdaptedChart& chart, const FieldExpr& weight, const BallConfig& cfg = {});

}  // namespace achart
