#include "achart/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace achart {

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct Spectral::Impl {
    GridGeometry g;
    int n = 0;
    std::size_t N = 0;
    std::vector<std::vector<double>> k;     // angular wavenumber per axis index
    std::vector<std::vector<char>> nyquist; // 1 at the Nyquist index of even axes
    std::vector<double> ksq;                // |k|^2 per flat spectral index
    std::vector<std::vector<int>> axis_index;  // per axis, index along the axis of each flat index
    fftw_plan fwd = nullptr, bwd = nullptr;

    using cvec = std::vector<std::complex<double>>;

    void forward(const double* in, cvec& out) const {
        out.resize(N);
        for (std::size_t p = 0; p < N; ++p) out[p] = in[p];
        fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(out.data()), reinterpret_cast<fftw_complex*>(out.data()));
    }
    void inverse(cvec& spec, double* out) const {
        fftw_execute_dft(bwd, reinterpret_cast<fftw_complex*>(spec.data()), reinterpret_cast<fftw_complex*>(spec.data()));
        const double s = 1.0 / static_cast<double>(N);
        for (std::size_t p = 0; p < N; ++p) out[p] = spec[p].real() * s;
    }
    std::complex<double> ik(int axis, std::size_t p) const {
        const int i = axis_index[axis][p];
        if (nyquist[axis][i]) return 0.0;
        return {0.0, k[axis][i]};
    }
};

Spectral::Spectral(const GridGeometry& g) : impl_(std::make_unique<Impl>()) {
    Impl& I = *impl_;
    I.g = g;
    I.n = g.dim();
    I.N = g.size();
    I.k.resize(I.n);
    I.nyquist.resize(I.n);
    I.axis_index.resize(I.n);
    for (int d = 0; d < I.n; ++d) {
        const int m = g.extents[d];
        const double L = m * g.spacing[d];
        I.k[d].resize(m);
        I.nyquist[d].assign(m, 0);
        for (int i = 0; i < m; ++i) {
            int f = i <= (m - 1) / 2 ? i : i - m;
            if (m % 2 == 0 && i == m / 2) {
                f = m / 2;
                I.nyquist[d][i] = 1;
            }
            I.k[d][i] = 2.0 * std::numbers::pi * f / L;
        }
        I.axis_index[d].resize(I.N);
        const std::size_t st = g.stride(d);
        for (std::size_t p = 0; p < I.N; ++p) I.axis_index[d][p] = static_cast<int>((p / st) % m);
    }
    I.ksq.assign(I.N, 0.0);
    for (int d = 0; d < I.n; ++d)
        for (std::size_t p = 0; p < I.N; ++p) {
            const double kk = I.k[d][I.axis_index[d][p]];
            I.ksq[p] += kk * kk;
        }
    std::lock_guard<std::mutex> lock(plan_mutex());
    auto* buf = fftw_alloc_complex(I.N);
    I.fwd = fftw_plan_dft(I.n, g.extents.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    I.bwd = fftw_plan_dft(I.n, g.extents.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(buf);
    if (!I.fwd || !I.bwd) throw std::runtime_error("Spectral: FFT planning failed");
}

Spectral::~Spectral() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

const GridGeometry& Spectral::geometry() const { return impl_->g; }
std::size_t Spectral::size() const { return impl_->N; }

void Spectral::derivative(const double* in, int axis, double* out) const {
    const Impl& I = *impl_;
    Impl::cvec s;
    I.forward(in, s);
    for (std::size_t p = 0; p < I.N; ++p) s[p] *= I.ik(axis, p);
    I.inverse(s, out);
}

void Spectral::gradient(const double* in, const std::vector<double*>& out) const {
    const Impl& I = *impl_;
    Impl::cvec s, t(I.N);
    I.forward(in, s);
    for (int d = 0; d < I.n; ++d) {
        for (std::size_t p = 0; p < I.N; ++p) t[p] = s[p] * I.ik(d, p);
        I.inverse(t, out[d]);
    }
}

void Spectral::second_derivative(const double* in, int a, int b, double* out) const {
    const Impl& I = *impl_;
    Impl::cvec s;
    I.forward(in, s);
    for (std::size_t p = 0; p < I.N; ++p) {
        if (a == b) {
            const double kk = I.k[a][I.axis_index[a][p]];
            s[p] *= -kk * kk;
        } else {
            s[p] *= I.ik(a, p) * I.ik(b, p);
        }
    }
    I.inverse(s, out);
}

void Spectral::laplacian(const double* in, double* out) const {
    const Impl& I = *impl_;
    Impl::cvec s;
    I.forward(in, s);
    for (std::size_t p = 0; p < I.N; ++p) s[p] *= -I.ksq[p];
    I.inverse(s, out);
}

double Spectral::solve_poisson(const double* in, double* out) const {
    const Impl& I = *impl_;
    Impl::cvec s;
    I.forward(in, s);
    const double mean = s[0].real() / static_cast<double>(I.N);
    s[0] = 0.0;
    for (std::size_t p = 1; p < I.N; ++p) s[p] /= -I.ksq[p];
    I.inverse(s, out);
    return mean;
}

GridGeometry Spectral::upsampled_geometry(int factor) const {
    GridGeometry u = impl_->g;
    for (int d = 0; d < u.dim(); ++d) {
        u.extents[d] *= factor;
        u.spacing[d] /= factor;
    }
    return u;
}

std::vector<double> Spectral::upsample(const double* in, int factor) const {
    const Impl& I = *impl_;
    if (factor < 1) throw std::invalid_argument("upsample: factor must be positive");
    Impl::cvec s;
    I.forward(in, s);
    GridGeometry ug = upsampled_geometry(factor);
    const std::size_t M = ug.size();
    Impl::cvec big(M, 0.0);
    std::vector<int> idx(I.n), uidx(I.n);
    for (std::size_t p = 0; p < I.N; ++p) {
        I.g.unravel(p, idx.data());
        // Nyquist coefficients split evenly between +m/2 and -m/2.
        int nsplit = 0;
        for (int d = 0; d < I.n; ++d) nsplit += I.nyquist[d][idx[d]];
        const std::complex<double> c = s[p] / static_cast<double>(1 << nsplit);
        for (int mask = 0; mask < (1 << nsplit); ++mask) {
            int bit = 0;
            for (int d = 0; d < I.n; ++d) {
                const int m = I.g.extents[d];
                int f = idx[d] <= (m - 1) / 2 ? idx[d] : idx[d] - m;
                if (I.nyquist[d][idx[d]]) {
                    f = (mask >> bit & 1) ? -m / 2 : m / 2;
                    ++bit;
                }
                const int mm = ug.extents[d];
                uidx[d] = f >= 0 ? f : f + mm;
            }
            big[ug.ravel(uidx.data())] += c;
        }
    }
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_plan plan = fftw_plan_dft(I.n, ug.extents.data(), reinterpret_cast<fftw_complex*>(big.data()),
                                   reinterpret_cast<fftw_complex*>(big.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    std::vector<double> out(M);
    const double sc = 1.0 / static_cast<double>(I.N);
    for (std::size_t p = 0; p < M; ++p) out[p] = big[p].real() * sc;
    return out;
}

namespace {

constexpr double kErfSlope = 8.0;

double erf_raw(double x) { return 0.5 * std::erfc(-kErfSlope * (x - 0.5)); }
double erf_scale() { return erf_raw(1.0) - erf_raw(0.0); }

}  // namespace

double smooth_step(double x, StepProfile profile) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    if (profile == StepProfile::Erf) return (erf_raw(x) - erf_raw(0.0)) / erf_scale();
    const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

double smooth_step_derivative(double x, StepProfile profile) {
    if (x <= 0 || x >= 1) return 0.0;
    if (profile == StepProfile::Erf) {
        const double y = kErfSlope * (x - 0.5);
        return kErfSlope * std::exp(-y * y) / (std::sqrt(M_PI) * erf_scale());
    }
    const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
    return a * b * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x))) / ((a + b) * (a + b));
}

double radial_cutoff(const double* x, int n, double r_in, double r_out, StepProfile profile) {
    double r2 = 0;
    for (int d = 0; d < n; ++d) r2 += x[d] * x[d];
    const double r = std::sqrt(r2);
    return 1.0 - smooth_step((r - r_in) / (r_out - r_in), profile);
}

void radial_cutoff_gradient(const double* x, int n, double r_in, double r_out, double* g, StepProfile profile) {
    double r2 = 0;
    for (int d = 0; d < n; ++d) r2 += x[d] * x[d];
    const double r = std::sqrt(r2);
    const double w = r_out - r_in;
    const double dr = r > 0 ? -smooth_step_derivative((r - r_in) / w, profile) / w : 0.0;
    for (int d = 0; d < n; ++d) g[d] = r > 0 ? dr * x[d] / r : 0.0;
}

PeriodicInterpolator::PeriodicInterpolator(GridGeometry geom, std::vector<double> values, int ncomp)
    : geom_(std::move(geom)), values_(std::move(values)), ncomp_(ncomp) {
    if (values_.size() != geom_.size() * static_cast<std::size_t>(ncomp_))
        throw std::invalid_argument("PeriodicInterpolator: size mismatch");
    if (geom_.dim() < 1 || geom_.dim() > 3) throw std::invalid_argument("PeriodicInterpolator: dimension must be 1 to 3");
}

void PeriodicInterpolator::eval(const double* x, double* out) const {
    const int n = geom_.dim();
    constexpr int S = 6;
    int base[3];
    double w[3][S];
    for (int d = 0; d < n; ++d) {
        const double u = (x[d] - geom_.origin[d]) / geom_.spacing[d];
        const int i0 = static_cast<int>(std::floor(u));
        const double f = u - i0;
        base[d] = i0 - 2;
        for (int a = 0; a < S; ++a) {
            double num = 1, den = 1;
            const double xa = a - 2;
            for (int b = 0; b < S; ++b) {
                if (b == a) continue;
                const double xb = b - 2;
                num *= f - xb;
                den *= xa - xb;
            }
            w[d][a] = num / den;
        }
    }
    for (int c = 0; c < ncomp_; ++c) out[c] = 0.0;
    const std::size_t N = geom_.size();
    int idx[3];
    const int total = n == 1 ? S : (n == 2 ? S * S : S * S * S);
    for (int t = 0; t < total; ++t) {
        int r = t;
        double weight = 1;
        for (int d = n - 1; d >= 0; --d) {
            const int a = r % S;
            r /= S;
            const int m = geom_.extents[d];
            int i = (base[d] + a) % m;
            if (i < 0) i += m;
            idx[d] = i;
            weight *= w[d][a];
        }
        const std::size_t p = geom_.ravel(idx);
        for (int c = 0; c < ncomp_; ++c) out[c] += weight * values_[c * N + p];
    }
}

}  // namespace achart
