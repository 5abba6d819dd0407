#pragma once
// Helpers shared by the adapted-chart sources.

namespace achart::detail {

/// Largest singular value of a row-major n x n matrix.
double operator_norm(const double* M, int n);
/// |x| <= r with a relative rounding allowance.
bool in_unit_ball(const double* x, int n, double r);

}  // namespace achart::detail
