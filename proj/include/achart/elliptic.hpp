#pragma once
// Curl-divergence operator, its right inverse, the divergence corrector and regularity checks.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "achart/grid.hpp"
#include "achart/spectral.hpp"
#include "achart/vectorfield.hpp"
#include "achart/zygmund.hpp"

namespace achart {

enum class DiffMethod { Spectral, FiniteDifference4 };

/// Number of output components of apply_E: n(n-1)/2 curls plus the divergence.
int e_components(int n);
/// Output slot of the curl component d_j A_k - d_k A_j (j < k); slots are lexicographic.
int curl_slot(int n, int j, int k);

/// Curl components (j < k, lexicographic) followed by the divergence of a periodic vector field.
GridField apply_E(const GridField& A, DiffMethod method = DiffMethod::Spectral);
/// Formal L2 adjoint of apply_E.
GridField apply_E_adjoint(const GridField& G, DiffMethod method = DiffMethod::Spectral);

/// Periodic box of side 4D centred at the origin with `count` points per axis (odd counts avoid Nyquist modes).
GridGeometry elliptic_box(int n, double D, int count);

struct RightInverseConfig {
    double D = 1.0;
    double inner = 0.95;    // data cutoff equals 1 on B(inner * D)
    double support = 0.99;  // and vanishes outside B(support * D)
};

struct RightInverseResult {
    GridField B;
    std::vector<double> mean_removed;  // per data component, mean of the cut-off data before compensation
    double gradient_at_0 = 0.0;        // |dB(0)| after normalisation; equals the part fixed by g(0)
    double value_at_0 = 0.0;           // |B(0)| after normalisation
    double compensation_residual = 0.0;
    bool mean_flag = false;  // compensation failed to cancel the mean or gradient constraints
};

/// B = E* (-Laplacian)^-1 applied to cutoff * g plus shell-supported compensation that
/// cancels the mean mode and the symmetric trace-free part of dB(0); then B(0) is subtracted.
/// E B = g holds on B(inner * D). In dimension 3 this needs the cut-off curl data to stay closed.
RightInverseResult right_inverse_P(const GridField& g, const RightInverseConfig& cfg = {});

/// Right inverse of E with the compensation table precomputed for one grid.
class EInverse {
public:
    EInverse(const GridGeometry& geom, const RightInverseConfig& cfg = {});
    ~EInverse();
    RightInverseResult apply(const GridField& g) const;
    const GridGeometry& geometry() const;

private:
    RightInverseConfig cfg_;
    std::unique_ptr<Spectral> sp_;
    std::size_t centre_ = 0;
    std::vector<double> cutoff_;
    std::vector<std::vector<double>> bumps_;
    std::vector<double> matrix_, pinv_;
    int rows_ = 0, cols_ = 0;
};

/// Right inverse of the Laplacian on a box: lap u = f on B(shell_inner), with u(0) = 0 and du(0) = 0.
/// The mean and gradient constraints are met by adding multiples of S and S * sin(2 pi x_d / L_d),
/// where S vanishes on B(shell_inner) and equals 1 outside B(shell_outer).
class LaplaceInverse {
public:
    LaplaceInverse(const Spectral& sp, double shell_inner, double shell_outer,
                   StepProfile profile = StepProfile::Compact);
    /// Solves one scalar component; returns the worst constraint residual.
    double solve(const double* f, double* u) const;

private:
    const Spectral* sp_;
    std::size_t centre_ = 0;
    std::vector<std::vector<double>> bumps_;
    std::vector<std::vector<double>> responses_;  // Poisson solutions of the compensation modes
    std::vector<double> means_;
    std::vector<double> pinv_;                    // bumps x (n + 1) min-norm solve matrix
    int rows_ = 0;
};

using MatrixFn = std::function<void(const double* t, double* A)>;  // A[j*n + k]

struct CorrectorConfig {
    double D = 4.0;          // equation enforced on B(D)
    double box_side = 16.0;
    int grid = 129;          // points per axis of the periodic box
    double tol = 1e-10;      // target sup |Psi| on B(D)
    int max_iter = 50;
    double s0 = 1.5;
    double gamma2 = 0.0;     // > 0: refuse when the measured C^{s0} norm of A on B(D + 1) exceeds it
    int upsample = 0;        // 0: 4 in 2D, 2 in 3D
    double check_radius = 3.0;  // v-ball for the finite-difference divergence check
    double check_spacing = 0.05;
};

struct CorrectorSolution {
    GridGeometry geom;
    GridField A;   // input times a cutoff equal to 1 on B(D), matrix
    GridField R;   // vector
    GridField dR;  // matrix, dR[k][l] = d R_k / d t_l
    int iterations = 0;
    std::vector<double> residual_history;
    double residual_psi = 0.0;   // sup |Psi(A, R)| on B(D), spectral
    double div_residual = 0.0;   // sup of the v-divergence of A_hat columns on B(check_radius), finite differences
    double div_assembled = 0.0;  // same quantity at grid nodes from spectral derivatives of the assembled A_hat
    double det_dH_min = 0.0;     // on B(D)
    double ahat_sup = 0.0;       // largest |A_hat| entry on B(D)
    double a_norm = -1.0;        // measured C^{s0} norm of A when requested
    double gamma2_estimate = 0.0;  // threshold in force
    double r_sup = 0.0, dr_sup = 0.0;
    bool converged = false;
    std::string reason;
};

/// Samples of A on the corrector box, taken on B(D + 3.5) and zero outside.
GridField corrector_sample(const MatrixFn& A, int n, const CorrectorConfig& cfg);

/// Fixed-point solve for R with H(t) = t + R(t) making the columns of A_hat divergence free in v = H(t).
CorrectorSolution solve_corrector(const GridField& A, const CorrectorConfig& cfg = {});
CorrectorSolution solve_corrector(const MatrixFn& A, int n, const CorrectorConfig& cfg = {});

/// Interpolated R, dR and A from a corrector solution, with Newton inversion of H.
class CorrectorMap {
public:
    explicit CorrectorMap(const CorrectorSolution& sol, int factor = 0);
    int dim() const { return n_; }
    /// R(t), dR(t) and A(t) (any may be null).
    void jet(const double* t, double* R, double* dR, double* A) const;
    void H(const double* t, double* v) const;
    /// Newton from t = v; 20 iterations, step tolerance 1e-12. Returns false without convergence.
    bool H_inverse(const double* v, double* t, int* iterations = nullptr) const;
    /// A_hat(v) = dR^T + A (I + dR^T) at t = H^-1(v).
    bool A_hat(const double* v, double* out) const;

private:
    int n_ = 0;
    PeriodicInterpolator interp_;    // R and dR on the upsampled grid
    PeriodicInterpolator a_interp_;  // A on the base grid
};

/// Largest eps in eps0 * 2^k (k < steps) for which eps * profile converges, per grid count.
struct Gamma2Sweep {
    std::vector<int> grids;
    std::vector<double> eps_max;            // 0 when even eps0 fails
    std::vector<std::vector<double>> tried;  // eps values per grid
    std::vector<std::vector<char>> success;
    double profile_norm = 0.0;              // C^{s0} norm of the profile on B(D + 1)
    bool within_factor_2 = false;
};
Gamma2Sweep gamma2_sweep(const MatrixFn& profile, int n, const std::vector<int>& grids, const CorrectorConfig& cfg,
                         double eps0 = 0.05, int steps = 6);

/// Curl rows of the commutator system for each column i of A_hat:
/// E(A_hat column) + Gamma = C_hat, with zero divergence rows for Gamma and C_hat.
/// Output shape {e_components(n), n}.
GridField gamma_term(const GridField& Ahat, const std::vector<GridField>& dAhat);
/// Same quantity accumulated term by term.
GridField gamma_term_termwise(const GridField& Ahat, const std::vector<GridField>& dAhat);
/// c has shape {n, n, n} with [Y_j, Y_k] = sum_l c[j][k][l] Y_l.
GridField chat_term(const GridField& Ahat, const GridField& c);
/// Frame-mode commutator tensor restricted to the frame slots, shape {n, n, n}.
GridField commutator_grid(const CommutatorTensor& t);

struct BootstrapConfig {
    std::vector<double> center;  // empty: origin
    double radius = 1.0;         // inner ball of the lattice
    double s = 2.5;              // estimator order for A_hat
    double s_c = 1.5;            // estimator order for C_hat
    int k_min = 2;
    int k_max = 0;
    double slack = 0.15;
};

struct BootstrapReport {
    double exponent_ahat = 0.0;
    double exponent_chat = 0.0;
    double window_cap = 0.0;
    double required = 0.0;
    double residual_sup = 0.0;   // sup of |E A_hat + Gamma - C_hat| on the inner ball
    double div_sup = 0.0;        // sup of the divergence rows
    double gamma_agreement = 0.0;  // assembled vs termwise
    bool pass = false;
    bool insufficient_scales = false;
    std::string note;
};

/// Ahat: matrix field on a lattice; c: {n, n, n} commutator field on the same lattice.
BootstrapReport bootstrap_check(const GridField& Ahat, const GridField& c, const BootstrapConfig& cfg = {});

}  // namespace achart
