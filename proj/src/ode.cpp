#include "ctraj/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ctraj {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// error coefficients b - b*
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// dense output coefficients
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kBeta = 0.04;  // PI stabilisation

double max_modulus(const CVector& y) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) m = std::max(m, std::abs(y[i]));
    return m;
}

}  // namespace

std::vector<double> uniform_times(double T, std::size_t intervals) {
    intervals = std::max<std::size_t>(intervals, 1);
    std::vector<double> t(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(intervals);
    t.back() = T;
    return t;
}

double DormandPrince::error_norm(const CVector& y0, const CVector& y1, const CVector& err) const {
    double acc = 0.0;
    const auto n = y0.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sre = opt_.atol + opt_.rtol * std::max(std::abs(y0[i].real()), std::abs(y1[i].real()));
        const double sim = opt_.atol + opt_.rtol * std::max(std::abs(y0[i].imag()), std::abs(y1[i].imag()));
        const double qre = err[i].real() / sre;
        const double qim = err[i].imag() / sim;
        acc += qre * qre + qim * qim;
    }
    return std::sqrt(acc / static_cast<double>(2 * std::max<Eigen::Index>(n, 1)));
}

double DormandPrince::initial_step(const OdeRhs& rhs, double t0, const CVector& y0, const CVector& f0,
                                   double span) const {
    if (opt_.initial_step > 0.0) return std::min(opt_.initial_step, span);
    // Hairer-Norsett-Wanner starting step heuristic.
    auto scaled = [&](const CVector& v) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double s = opt_.atol + opt_.rtol * std::abs(y0[i]);
            acc += std::norm(v[i]) / (s * s);
        }
        return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(v.size(), 1)));
    };
    const double d0 = scaled(y0);
    const double d1 = scaled(f0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    CVector y1 = y0 + h0 * f0;
    CVector f1(y0.size());
    rhs(t0 + h0, y1, f1);
    const double d2 = scaled(f1 - f0) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, span});
}

CVector DormandPrince::integrate(const OdeRhs& rhs, CVector y, std::span<const double> sample_times,
                                 const OdeSampleObserver& on_sample, const OdeStepObserver& on_step) {
    stats_ = {};
    if (sample_times.empty()) throw Error(ErrorCode::InvalidArgument, "no output times");
    for (std::size_t k = 1; k < sample_times.size(); ++k) {
        if (sample_times[k] < sample_times[k - 1]) throw Error(ErrorCode::InvalidArgument, "output times not sorted");
    }
    const auto n = y.size();
    double t = sample_times.front();
    const double t_end = sample_times.back();
    if (on_step) on_step(t, y);
    std::size_t next = 0;
    while (next < sample_times.size() && sample_times[next] <= t) {
        if (on_sample) on_sample(next, sample_times[next], y);
        ++next;
    }
    if (next == sample_times.size()) return y;

    CVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
    CVector r2(n), r3(n), r4(n), r5(n), ys(n);
    rhs(t, y, k1);
    ++stats_.rhs_evaluations;
    double h = initial_step(rhs, t, y, k1, t_end - t);
    double err_old = 1e-4;

    while (t < t_end) {
        if (stats_.accepted + stats_.rejected > opt_.max_steps) {
            throw Error(ErrorCode::IntegrationFailure, "maximum number of steps exceeded at t=" + std::to_string(t));
        }
        if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
        bool lands = false;
        double h_try = h;
        if (t + 1.01 * h_try >= t_end) {
            h_try = t_end - t;
            lands = true;
        }
        if (h_try <= 1e-14 * std::max(1.0, std::abs(t))) {
            throw Error(ErrorCode::IntegrationFailure, "step size underflow at t=" + std::to_string(t));
        }

        ytmp = y + h_try * a21 * k1;
        rhs(t + c2 * h_try, ytmp, k2);
        ytmp = y + h_try * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h_try, ytmp, k3);
        ytmp = y + h_try * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h_try, ytmp, k4);
        ytmp = y + h_try * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h_try, ytmp, k5);
        ytmp = y + h_try * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h_try, ytmp, k6);
        ynew = y + h_try * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h_try, ynew, k7);
        stats_.rhs_evaluations += 6;
        err = h_try * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double en = error_norm(y, ynew, err);
        if (!std::isfinite(en) || !all_finite(ynew)) en = 1e10;

        if (en <= 1.0) {
            ++stats_.accepted;
            const double t_new = lands ? t_end : t + h_try;
            if (max_modulus(ynew) > opt_.overflow) {
                throw Error(ErrorCode::IntegrationFailure, "state diverged at t=" + std::to_string(t_new));
            }
            // Continuous extension of order 4 for output inside the step.
            bool have_dense = false;
            while (next < sample_times.size() && sample_times[next] <= t_new) {
                const double ts = sample_times[next];
                if (ts == t_new) {
                    if (on_sample) on_sample(next, ts, ynew);
                } else {
                    if (!have_dense) {
                        r2 = ynew - y;
                        r3 = h_try * k1 - r2;
                        r4 = r2 - h_try * k7 - r3;
                        r5 = h_try * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                        have_dense = true;
                    }
                    const double th = (ts - t) / h_try;
                    const double th1 = 1.0 - th;
                    ys = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                    if (on_sample) on_sample(next, ts, ys);
                }
                ++next;
            }
            t = t_new;
            y = ynew;
            k1 = k7;
            if (on_step) on_step(t, y);
            const double fac = std::clamp(kSafety * std::pow(std::max(en, 1e-10), -0.2 + 0.75 * kBeta) *
                                              std::pow(err_old, kBeta),
                                          kMinFactor, kMaxFactor);
            err_old = std::max(en, 1e-4);
            h = h_try * fac;
        } else {
            ++stats_.rejected;
            const double fac = std::max(kMinFactor, kSafety * std::pow(en, -0.2));
            h = h_try * fac;
        }
    }
    return y;
}

}  // namespace ctraj
