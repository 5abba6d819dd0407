#pragma once
// Adapted coordinate charts: exponential coordinates, rescaling, the divergence
// corrector and verification of the chart properties.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "achart/ball.hpp"
#include "achart/elliptic.hpp"
#include "achart/fieldspec.hpp"
#include "achart/grid.hpp"
#include "achart/vectorfield.hpp"

namespace achart {

/// Failure of one pipeline stage; stage() names it ("frame", "phi0", "gamma", "corrector", "compose").
class ChartError : public std::runtime_error {
public:
    ChartError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct Chart0Config {
    double radius = 1.0;       // requested chart radius
    double min_radius = 1e-4;  // the dyadic shrink stops with an error below this
    int half_cells = 16;       // lattice half-width for the stored samples on B(eta1)
    int probe_cells = 8;       // lattice half-width for the shrink test
    double tol = 1e-11;        // flow tolerance
    double zeta = 1.0;         // frame selection threshold
};

/// Exponential coordinates Phi0(t) = exp(t . X_J0) x0 and the pulled-back fields Y_j = Phi0^* X_j.
/// Y_J0 = (I + A) grad: row j of I + A holds the coefficients of Y_{J0[j]}.
struct Chart0 {
    FieldSet fields;
    std::vector<double> x0;
    std::vector<int> J0;
    double eta1 = 0.0;
    std::vector<double> radius_trace;  // radii tried by the shrink loop
    double tol = 1e-11;

    GridGeometry lattice;  // ball lattice on B(eta1)
    std::vector<char> inside;  // lattice points in the closed ball
    GridField Y;        // {q, n}, Y[j][k]
    GridField A;        // {n, n}
    GridField b;        // {q, n}: Y_j = sum_l b[j][l] Y_{J0[l]}
    GridField c_tilde;  // {q, q, q}: [Y_i, Y_j] = sum_k c[i][j][k] Y_k
    double a_sup = 0.0;  // sup of the operator norm of A on B(eta1)

    /// Phi0(t) and dPhi0(t) (dx[k*n + l] = d x_k / d t_l). Returns false if the flow fails.
    bool jet(const double* t, double* x, double* dx) const;
    /// Y[j*n + k] for all q fields at t.
    bool pullback(const double* t, double* Y) const;
    /// A[j*n + k] at t.
    bool A_at(const double* t, double* A) const;
};

Chart0 build_phi0_chart(const FieldSet& fields, const std::vector<double>& x0, const Chart0Config& cfg = {});

struct ScaleConfig {
    double gamma2 = 0.25;   // working threshold for the C^{s0} norm of A_gamma on B(5)
    double s0 = 1.5;
    int half_cells = 32;    // lattice half-width on B(5)
    int max_halvings = 20;
    double reach = 7.5;     // A_gamma must be computable on B(reach) for the corrector
};

/// A_gamma(t) = A(gamma t) on B(5) with K = 1 / gamma.
struct ScaledChart {
    double gamma = 0.0, K = 0.0, gamma_max = 0.0;
    GridGeometry lattice;  // ball lattice on B(5)
    GridField A_gamma;     // {n, n}
    GridField c_gamma;     // {q, q, q}: gamma * c(Phi0(gamma t))
    double a_norm = 0.0;          // C^{s0} norm of A_gamma on B(5)
    double a_norm_eta1 = 0.0;     // C^{s0} norm of A on B(eta1)
    double scaling_bound = 0.0;   // 91 * gamma * a_norm_eta1 * 1.1
    bool scaling_ok = false;      // a_norm <= scaling_bound
    std::vector<std::pair<double, double>> trace;  // (gamma, norm) per tried gamma
};

ScaledChart choose_gamma_and_rescale(const Chart0& chart0, const ScaleConfig& cfg = {});

struct ChartConfig {
    Chart0Config chart0;
    ScaleConfig scale;
    CorrectorConfig corrector;
    int half_cells = 32;  // lattice half-width on B(1) for the stored chart samples
};

struct ChartRadii {
    double chi = 0.0;  // upper bound of the X_J0 control distance from x0 over Phi(B(1))
    double xi1 = 0.0, xi2 = 0.0;  // filled by verify_theorem
};

/// Phi = Phi0 o Psi_gamma o Phi1 with Phi1 = H^-1 from the corrector; Yhat_j = Phi^* X_j.
struct AdaptedChart {
    Chart0 chart0;
    ScaledChart scaled;
    double gamma = 0.0, K = 0.0;
    CorrectorSolution corrector;
    std::shared_ptr<const CorrectorMap> map;

    GridGeometry lattice;      // ball lattice on B(1)
    std::vector<char> inside;  // lattice points in the closed unit ball
    GridField phi;             // {n}: Phi(v)
    GridField Yhat;            // {q, n}
    GridField A_final;         // {n, n}: Yhat_J0 = K (I + A_final) grad
    GridField b_hat;           // {q, n}: Yhat_j = sum_l b[j][l] Yhat_{J0[l]}
    double a_final_sup = 0.0;  // sup of the operator norm on B(1)
    double b_residual = 0.0;   // least-squares residual of b_hat
    ChartRadii radii;

    int dim() const { return chart0.fields.n(); }
    /// Phi(v), dPhi(v) and Yhat(v) (any output may be null). Returns false on flow or Newton failure.
    bool eval(const double* v, double* x, double* dphi = nullptr, double* Yhat = nullptr) const;
    /// Newton solve of Phi(v) = x from the linearisation at 0. Returns false without convergence.
    bool inverse(const double* x, double* v) const;
};

AdaptedChart build_full_chart(const FieldSet& fields, const std::vector<double>& x0, const ChartConfig& cfg = {});

struct VerifyItem {
    std::string id;  // theorem item letter
    std::string description;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct ExponentRow {
    double s = 0.0;
    int field = 0;
    double norm = 0.0;
    double exponent = 0.0;
    double required = 0.0;
    bool resolved_smooth = false;
};

struct EquivalenceRow {
    std::string function;
    double euclid = 0.0;     // C^s norm of f o Phi on B(1)
    double adapted_j0 = 0.0; // X_J0-adapted estimate of f on Phi(B(1))
    double adapted_x = 0.0;  // X-adapted estimate of f on Phi(B(1))
    double ratio_j0 = 0.0, ratio_x = 0.0;
};

struct VerifyConfig {
    std::vector<double> s_list = {1.5};
    double wedge_bound = 10.0;     // item (b)
    int injectivity_pairs = 200;   // item (e)
    std::uint64_t seed = 1;
    bool radii = true;             // item (f)
    int xi_samples = 100;
    int xi_levels = 24;
    double xi_start = 4.0;
    BallConfig ball;               // sampler for item (f)
    int exponent_k_min = 1;        // item (j) scales radius * 2^-k
    int exponent_k_max = 0;
    double exponent_noise = 1e-9;
    double exponent_slack = 0.15;
    bool norms = true;             // items (k), (l)
    std::vector<std::string> corpus = {"sin(x1)*cos(x2)", "exp(x1)"};
    double norm_s = 1.5;
    double equivalence_bound = 100.0;
    int norm_base_points = 3;
};

struct VerificationReport {
    std::vector<VerifyItem> items;
    std::vector<ExponentRow> exponents;
    std::vector<double> input_exponents;  // smallest fitted exponent of the coefficients of each X_j near x0
    std::vector<EquivalenceRow> equivalence;
    ChartRadii radii;

    const VerifyItem* find(const std::string& id) const;
    /// True when every item with id in [first, last] passes.
    bool pass_range(char first, char last) const;
};

VerificationReport verify_theorem(AdaptedChart& chart, const VerifyConfig& cfg = {});

}  // namespace achart
