#pragma once
// Helpers shared by the elliptic sources.

#include <vector>

#include "achart/elliptic.hpp"

namespace achart::detail {

void derivative(const Spectral* sp, const GridGeometry& g, DiffMethod m, const double* in, int axis, double* out);
/// Flat index of the grid point at the origin; throws if there is none.
std::size_t centre_index(const GridGeometry& g);
std::vector<std::vector<double>> shell_directions(int n);
/// Smooth bumps of radius bump_radius centred at shell_radius times each shell direction.
std::vector<std::vector<double>> shell_bumps(const GridGeometry& g, double shell_radius, double bump_radius,
                                             StepProfile profile = StepProfile::Compact);
/// S = 1 - radial_cutoff(r_in, r_out) and S * sin(2 pi x_d / L_d) for each axis d of the periodic box.
std::vector<std::vector<double>> shell_modes(const GridGeometry& g, double r_in, double r_out, StepProfile profile);
/// Pseudoinverse of a row-major rows x cols matrix, returned row-major cols x rows.
std::vector<double> min_norm_inverse(const std::vector<double>& M, int rows, int cols);
double mean(const std::vector<double>& v);

}  // namespace achart::detail
