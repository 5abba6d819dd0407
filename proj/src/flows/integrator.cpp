#include "achart/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace achart {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

bool finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

OdeResult integrate(const OdeRhs& f, std::vector<double> y, double t0, double t1, const OdeOptions& opt,
                    const OdeInside& inside) {
    const std::size_t d = y.size();
    OdeResult res;
    res.t = t0;
    const double span = t1 - t0;
    if (opt.record) {
        res.ts.push_back(t0);
        res.ys.push_back(y);
    }
    if (span == 0.0) {
        res.y = y;
        return res;
    }
    const double dir = span > 0 ? 1.0 : -1.0;
    double h = opt.h_init > 0 ? opt.h_init * dir : span / 16.0;
    const double hmin = std::fabs(span) * opt.h_min_rel;
    std::vector<double> k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), tmp(d), y5(d);
    double t = t0;
    f(t, y.data(), k1.data());
    while (dir * (t1 - t) > 0) {
        if (res.steps + res.rejected >= opt.max_steps) {
            res.failed = true;
            res.reason = "step budget exhausted";
            break;
        }
        bool last = false;
        if (dir * (t + h - t1) >= 0) {
            h = t1 - t;
            last = true;
        }
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, tmp.data(), k2.data());
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, tmp.data(), k3.data());
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, tmp.data(), k4.data());
        for (std::size_t i = 0; i < d; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, tmp.data(), k5.data());
        for (std::size_t i = 0; i < d; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + h, tmp.data(), k6.data());
        for (std::size_t i = 0; i < d; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(t + h, y5.data(), k7.data());
        double err = 0;
        for (std::size_t i = 0; i < d; ++i) {
            double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            err = std::max(err, std::fabs(e));
        }
        const bool fin = std::isfinite(err) && finite(y5);
        const double ratio = fin ? err / opt.tol : 1e10;
        if (ratio <= 1.0) {
            if (inside && !inside(y5.data())) {
                res.exited = true;
                res.reason = "curve left the domain";
                break;
            }
            t = last ? t1 : t + h;
            y.swap(y5);
            k1.swap(k7);
            ++res.steps;
            res.error_estimate += err;
            if (opt.record) {
                res.ts.push_back(t);
                res.ys.push_back(y);
            }
            const double fac = ratio == 0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
            if (!last) h *= fac;
        } else {
            ++res.rejected;
            h *= std::clamp(0.9 * std::pow(ratio, -0.2), 0.1, 0.5);
        }
        if (std::fabs(h) < hmin && dir * (t1 - t) > hmin) {
            res.failed = true;
            res.reason = fin ? "step size underflow" : "non-finite state";
            break;
        }
    }
    res.t = t;
    res.y = std::move(y);
    return res;
}

}  // namespace achart
