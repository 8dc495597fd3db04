#include "ctraj/path_checks.hpp"
#include "ctraj/quadrature.hpp"
#include "ctraj/wkb.hpp"

#include <json.hpp>

#include <numbers>

namespace ctraj {

namespace {

void require_1d(const SInit& sinit) {
    if (sinit.dimension() != 1) throw Error(ErrorCode::DimensionMismatch, "path checks are one-dimensional");
}

// A from samples taken every `stride` points of a record with N*stride intervals.
DiscretePathMatrix matrix_from_record(const TrajectoryRecord& rec, const PotentialModel& model, const SInit& sinit,
                                      int N, std::size_t stride) {
    DiscretePathMatrix A;
    A.N = N;
    A.T = rec.T();
    A.mass = sinit.packet().masses[0];
    A.diag.resize(N);
    const double c = A.T * A.T / (A.mass * N * N);
    for (int k = 0; k < N; ++k) {
        const Complex v2 = model.eval_derivs(rec.x[k * stride], 2).tensors[2][0];
        A.diag[k] = k == 0 ? 1.0 - 0.5 * c * v2 + A.T * sinit.hessian()(0, 0) / (A.mass * N) : 2.0 - c * v2;
    }
    return A;
}

// Solves A x = e_j for the symmetric tridiagonal A (off-diagonals -1).
std::vector<Complex> tridiagonal_column(const DiscretePathMatrix& A, int j) {
    const int n = A.N;
    std::vector<Complex> c(n), d(n, Complex(0.0));
    d[j] = 1.0;
    Complex denom = A.diag[0];
    double scale = 0.0;
    for (const auto& z : A.diag) scale = std::max(scale, std::abs(z));
    auto check = [&](Complex p) {
        if (std::abs(p) < 1e-14 * (1.0 + scale)) throw Error(ErrorCode::SingularMatrix, "path matrix is singular");
    };
    check(denom);
    c[0] = -1.0 / denom;
    d[0] = d[0] / denom;
    for (int i = 1; i < n; ++i) {
        denom = A.diag[i] + c[i - 1];
        check(denom);
        c[i] = -1.0 / denom;
        d[i] = (d[i] + d[i - 1]) / denom;
    }
    for (int i = n - 2; i >= 0; --i) d[i] -= c[i] * d[i + 1];
    return d;
}

}  // namespace

CMatrix DiscretePathMatrix::dense() const {
    CMatrix A = CMatrix::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        A(i, i) = diag[i];
        if (i + 1 < N) A(i, i + 1) = A(i + 1, i) = -1.0;
    }
    return A;
}

std::vector<Complex> DiscretePathMatrix::minors() const {
    std::vector<Complex> D(N);
    for (int n = 0; n < N; ++n) {
        if (n == 0) D[0] = diag[0];
        else if (n == 1) D[1] = diag[1] * D[0] - 1.0;
        else D[n] = diag[n] * D[n - 1] - D[n - 2];
    }
    return D;
}

DiscretePathMatrix path_matrix(const CVector& x_start, const PotentialModel& model, const SInit& sinit, double T,
                               int N, const DynamicsOptions& options) {
    require_1d(sinit);
    if (N < 2) throw Error(ErrorCode::InvalidArgument, "path matrix needs N >= 2");
    const auto flow = integrate_flow(x_start, model, sinit, T, nullptr, options, N);
    return matrix_from_record(flow.record, model, sinit, N, 1);
}

DeterminantResult discrete_determinant(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                       double T, int N, const DynamicsOptions& options) {
    require_1d(sinit);
    if (N < 2) throw Error(ErrorCode::InvalidArgument, "discrete determinant needs N >= 2");
    const auto flow = integrate_flow(x_start, model, sinit, T, nullptr, options, N);
    const auto A = matrix_from_record(flow.record, model, sinit, N, 1);
    DeterminantResult r;
    r.N = N;
    r.D_N = A.minors().back();
    r.det_U = flow.record.U.back()(0, 0);
    r.error = std::abs(r.D_N - r.det_U);
    return r;
}

InverseLimitResult inverse_limit_check(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                       double T, int N, int i, int j, const DynamicsOptions& options) {
    require_1d(sinit);
    if (i < 0 || j < 0 || i >= N || j >= N) throw Error(ErrorCode::InvalidArgument, "index outside the path matrix");
    constexpr std::size_t refine = 8;
    const auto flow = integrate_flow(x_start, model, sinit, T, nullptr, options, N * refine);
    const auto& rec = flow.record;
    const auto A = matrix_from_record(rec, model, sinit, N, refine);
    const auto col = tridiagonal_column(A, j);

    std::vector<Complex> inv_d2(rec.times.size());
    for (std::size_t k = 0; k < inv_d2.size(); ++k) {
        const Complex D = rec.U[k](0, 0);
        inv_d2[k] = 1.0 / (D * D);
    }
    const auto G = cumulative_integral_from_end(inv_d2, T / static_cast<double>(N * refine));
    const std::size_t ki = i * refine, kj = j * refine;
    InverseLimitResult r;
    r.discrete = T / N * col[i];
    r.continuum = rec.U[ki](0, 0) * rec.U[kj](0, 0) * G[std::max(ki, kj)];
    const double scale = std::max(std::abs(r.continuum), std::abs(r.discrete));
    r.relative_error = scale > 0.0 ? std::abs(r.discrete - r.continuum) / scale : 0.0;
    return r;
}

Complex inv_sqrt_det(const CMatrix& A) {
    const Eigen::ComplexEigenSolver<CMatrix> es(A, false);
    const auto n = A.rows();
    Complex acc = std::exp(Complex(0.0, -std::numbers::pi * static_cast<double>(n) / 4.0));
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex lam = es.eigenvalues()[k];
        if (std::abs(lam) == 0.0) throw Error(ErrorCode::SingularMatrix, "Gaussian matrix is singular");
        acc /= std::sqrt(-kI * lam);
    }
    return acc;
}

Complex gaussian_moment(const CMatrix& A, MomentPattern pattern, int i, int j) {
    const auto n = A.rows();
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorCode::InvalidArgument, "moment index out of range");
    const auto lu = A.fullPivLu();
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularMatrix, "Gaussian matrix is singular");
    const CMatrix C = lu.inverse();
    const double N = static_cast<double>(n);
    const Complex isd = inv_sqrt_det(A);
    switch (pattern) {
        case MomentPattern::I4: return -3.0 / (N * N) * C(i, i) * C(i, i) * isd;
        case MomentPattern::I3J3:
            return -3.0 * kI / (N * N * N) *
                   (3.0 * C(i, i) * C(j, j) * C(i, j) + 2.0 * C(i, j) * C(i, j) * C(i, j)) * isd;
        case MomentPattern::IJ: return kI / N * C(i, j) * isd;
        case MomentPattern::I3J: return -3.0 / (N * N) * C(i, i) * C(i, j) * isd;
    }
    return 0.0;
}

Complex gaussian_moment_quadrature(const CMatrix& A, MomentPattern pattern, int i, int j, int points) {
    const int n = static_cast<int>(A.rows());
    if (n < 1 || n > 3) throw Error(ErrorCode::InvalidArgument, "quadrature oracle supports N <= 3");
    const Eigen::SelfAdjointEigenSolver<RMatrix> es(A.real());
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw Error(ErrorCode::InvalidArgument, "rotated contour needs Re A positive definite");
    // y = M z whitens Re A, so every axis decays like exp(-n z^2 / 2)
    const RMatrix M = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
    const CMatrix B = M.transpose().cast<Complex>() * A * M.cast<Complex>();
    // exp(-n/2 L^2) ~ 1e-40 at the edge
    const double L = std::sqrt(2.0 * 92.0 / n);
    if (points <= 0) {
        // exp(-a z^2/2) has spectral width |a|/sqrt(Re a); trapezoid error ~ exp(-2 pi^2 (sigma/h)^2)
        const double sigma = 1.0 / (std::sqrt(double(n)) * B.operatorNorm());
        const int needed = static_cast<int>(std::ceil(2.0 * L * 1.25 / sigma)) | 1;
        points = std::max(n == 3 ? 121 : 401, needed);
        if (n == 3 && points > 401)
            throw Error(ErrorCode::QuadratureFailure, "Im A too large for the 3D quadrature oracle");
    }
    const double h = 2.0 * L / (points - 1);
    const Complex rot = std::exp(Complex(0.0, std::numbers::pi / 4.0));
    int deg_i = 0, deg_j = 0;
    switch (pattern) {
        case MomentPattern::I4: deg_i = 4; break;
        case MomentPattern::I3J3: deg_i = 3; deg_j = 3; break;
        case MomentPattern::IJ: deg_i = 1; deg_j = 1; break;
        case MomentPattern::I3J: deg_i = 3; deg_j = 1; break;
    }
    Complex sum = 0.0;
    std::vector<int> idx(n, 0);
    std::size_t total = 1;
    for (int k = 0; k < n; ++k) total *= points;
    CVector z(n);
    for (std::size_t c = 0; c < total; ++c) {
        for (int k = 0; k < n; ++k) z[k] = -L + h * idx[k];
        const Complex q = (z.transpose() * B * z)(0, 0);
        const RVector y = M * z.real();
        sum += std::exp(-0.5 * n * q) * std::pow(y[i], deg_i) * std::pow(y[j], deg_j);
        for (int k = n - 1; k >= 0; --k) {
            if (++idx[k] < points) break;
            idx[k] = 0;
        }
    }
    // d^n Delta = (n / 2 pi i)^{n/2} d^n(e^{i pi/4} y); the monomial picks up rot^degree
    const double nn = n;
    const Complex norm = std::pow(nn / (2.0 * std::numbers::pi), 0.5 * nn);
    return sum * std::pow(h, nn) * std::abs(M.determinant()) * norm * std::pow(rot, deg_i + deg_j);
}

namespace {

struct FactorPieces {
    Complex foc1_s2;    // (factor - 1)/(i hbar)
    Complex nested_s2;  // iterated form
};

FactorPieces factor_on_grid(const std::vector<Complex>& D, const std::vector<Complex>& v3,
                            const std::vector<Complex>& v4, double h, double m) {
    const std::size_t n = D.size();
    std::vector<Complex> inv_d2(n), a3(n), a4(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Complex d2 = D[k] * D[k];
        inv_d2[k] = 1.0 / d2;
        a3[k] = v3[k] * d2 * D[k];
        a4[k] = v4[k] * d2 * d2;
    }
    const auto G = cumulative_integral_from_end(inv_d2, h);
    const auto Q = cumulative_integral(a3, h);

    // Single integral and the symmetric double integral reduced to ordered running integrals.
    std::vector<Complex> s1(n), aG(n);
    for (std::size_t k = 0; k < n; ++k) {
        s1[k] = a4[k] * G[k] * G[k];
        aG[k] = a3[k] * G[k];
    }
    const auto P = cumulative_integral(aG, h);
    std::vector<Complex> dbl(n);
    for (std::size_t k = 0; k < n; ++k) {
        dbl[k] = 2.0 * a3[k] * (3.0 * G[k] * G[k] * P[k] + 2.0 * G[k] * G[k] * G[k] * Q[k]);
    }
    FactorPieces out;
    out.foc1_s2 = simpson(s1, h) / (8.0 * m * m) + simpson(dbl, h) / (24.0 * m * m * m);

    // nested single-integral form
    std::vector<Complex> t(n);
    const auto c4 = cumulative_integral(a4, h);
    for (std::size_t k = 0; k < n; ++k) t[k] = c4[k] * inv_d2[k];
    const auto c4b = cumulative_integral(t, h);
    std::vector<Complex> b_src(n), a2_src(n);
    for (std::size_t k = 0; k < n; ++k) {
        b_src[k] = Q[k] * inv_d2[k];
        a2_src[k] = Q[k] * Q[k] * inv_d2[k];
    }
    const auto B = cumulative_integral(b_src, h);
    const auto a2b = cumulative_integral(a2_src, h);
    std::vector<Complex> a2c_src(n), ab_src(n);
    for (std::size_t k = 0; k < n; ++k) {
        a2c_src[k] = a2b[k] * inv_d2[k];
        ab_src[k] = Q[k] * B[k] * inv_d2[k];
    }
    const auto a2c = cumulative_integral(a2c_src, h);
    const auto abc = cumulative_integral(ab_src, h);
    std::vector<Complex> f1(n), f2(n), f3(n), f4(n);
    for (std::size_t k = 0; k < n; ++k) {
        f1[k] = inv_d2[k] * c4b[k];
        f2[k] = inv_d2[k] * B[k] * B[k];
        f3[k] = inv_d2[k] * a2c[k];
        f4[k] = inv_d2[k] * abc[k];
    }
    out.nested_s2 = simpson(f1, h) / (4.0 * m * m) + simpson(f2, h) / (8.0 * m * m * m) +
                    3.0 * simpson(f3, h) / (4.0 * m * m * m) + simpson(f4, h) / (4.0 * m * m * m);
    return out;
}

template <class T>
std::vector<T> every_other(const std::vector<T>& v) {
    std::vector<T> out;
    for (std::size_t k = 0; k < v.size(); k += 2) out.push_back(v[k]);
    return out;
}

}  // namespace

FirstOrderFactor first_order_factor(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                    double T, double hbar, const DynamicsOptions& options, std::size_t intervals) {
    require_1d(sinit);
    if (T <= 0.0) throw Error(ErrorCode::InvalidArgument, "first-order factor needs T > 0");
    intervals = std::max<std::size_t>(16, intervals + intervals % 4);
    const double m = sinit.packet().masses[0];
    FirstOrderFactor r;
    try {
        const auto flow = integrate_flow(x_start, model, sinit, T, nullptr, options, intervals);
        const auto& rec = flow.record;
        const std::size_t n = rec.times.size();
        std::vector<Complex> D(n), v3(n), v4(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto V = model.eval_derivs(rec.x[k], 4);
            D[k] = rec.U[k](0, 0);
            v3[k] = V.tensors[3][0];
            v4[k] = V.tensors[4][0];
        }
        const double h = T / static_cast<double>(intervals);
        const auto fine = factor_on_grid(D, v3, v4, h, m);
        const auto coarse = factor_on_grid(every_other(D), every_other(v3), every_other(v4), 2.0 * h, m);
        // one Richardson step for the fourth-order rules
        r.S2_paths = fine.foc1_s2 + (fine.foc1_s2 - coarse.foc1_s2) / 15.0;
        r.S2_nested = fine.nested_s2 + (fine.nested_s2 - coarse.nested_s2) / 15.0;
        const double mag = std::max(std::abs(r.S2_paths), 1e-300);
        r.quadrature_error = std::abs(fine.foc1_s2 - coarse.foc1_s2) / 15.0 / mag;
        r.factor = 1.0 + kI * hbar * r.S2_paths;
        r.S2_hierarchy = evolve_wkb(x_start, model, sinit, 2, T, options, 1).state.S[2];
    } catch (const Error& e) {
        throw Error(ErrorCode::QuadratureFailure, std::string("first-order factor: ") + e.what());
    }
    if (!std::isfinite(std::abs(r.S2_paths)) || !std::isfinite(std::abs(r.S2_nested))) {
        throw Error(ErrorCode::QuadratureFailure, "first-order factor is not finite");
    }
    const double ref = std::abs(kI * hbar * r.S2_hierarchy);
    const double diff = std::abs(r.factor - (1.0 + kI * hbar * r.S2_hierarchy));
    r.relative_error = ref > 0.0 ? diff / ref : diff;
    return r;
}

FirstOrderFactor verify_first_order_factor(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                           double T, double hbar, double tolerance, const DynamicsOptions& options) {
    auto r = first_order_factor(x_start, model, sinit, T, hbar, options);
    if (r.relative_error > tolerance) {
        throw Error(ErrorCode::ToleranceExceeded,
                    "first-order factor differs from 1 + i hbar S2 by " + std::to_string(r.relative_error));
    }
    return r;
}

StirlingResult stirling_modified(double n, double N, double S) {
    if (n < 2.0) throw Error(ErrorCode::InvalidArgument, "Stirling demonstration needs n >= 2");
    if (N <= 0.0 || S <= 0.0) throw Error(ErrorCode::InvalidArgument, "N and S must be positive");
    StirlingResult r;
    r.n = n;
    r.N = N;
    r.S = S;
    // bracket polynomial expanded in a = N - n, b = S - n: the n^7 and n^6 terms
    // cancel identically, so the direct form loses n^2 eps
    const double a = N - n, b = S - n;
    const double a2 = a * a, a3 = a2 * a, a4 = a3 * a, a5 = a4 * a, a6 = a5 * a, b2 = b * b;
    const double c5 = 6 * a2 - 6 * b + 1;
    const double c4 = 24 * a3 + 6 * a2 * b + 30 * a2 - 48 * a * b - 18 * a + 12 * b;
    const double c3 = 36 * a4 + 24 * a3 * b + 84 * a3 - 84 * a2 * b - 9 * a2 - 12 * a * b2 - 36 * a * b + 21 * b2;
    const double c2 = 24 * a5 + 36 * a4 * b + 84 * a4 - 48 * a3 * b - 24 * a2 * b2 - 18 * a2 * b - 18 * a * b2 +
                      10 * b2 * b;
    const double c1 = 6 * a6 + 24 * a5 * b + 36 * a5 - 6 * a4 * b - 12 * a3 * b2 - 9 * a2 * b2;
    const double c0 = 6 * a6 * b + 6 * a6;
    const double poly = ((((c5 * n + c4) * n + c3) * n + c2) * n + c1) * n + c0;
    const double N6 = std::pow(N, 6);
    r.correction = poly / (12.0 * N6);
    r.log_leading = 0.5 * std::log(2.0 * std::numbers::pi * S) + n * std::log(N) - N;
    r.log_corrected = r.log_leading + std::log1p(r.correction);
    r.log_reference = std::lgamma(n + 1.0);
    r.leading_error = std::abs(std::expm1(r.log_leading - r.log_reference));
    r.corrected_error = std::abs(std::expm1(r.log_corrected - r.log_reference));
    return r;
}

double log_factorial_quadrature(double n) {
    if (n < 1.0) throw Error(ErrorCode::InvalidArgument, "quadrature reference needs n >= 1");
    // x = n + sqrt(n) y; integrand exp(n log(1 + y/sqrt n) - sqrt(n) y) relative to its peak
    const double s = std::sqrt(n);
    const double h = 1e-3;
    double sum = 0.0;
    for (double y = -s + h; y < 60.0; y += h) {
        sum += std::exp(n * std::log1p(y / s) - s * y);
    }
    return std::log(sum * h * s) + n * std::log(n) - n;
}

std::string reports_to_json(const std::vector<CheckReport>& reports) {
    auto arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["check"] = r.name;
        j["parameters"] = r.parameters.empty() ? nlohmann::json::object() : nlohmann::json::parse(r.parameters);
        j["measured"] = r.measured;
        j["tolerance"] = r.tolerance;
        j["passed"] = r.passed;
        arr.push_back(j);
    }
    return arr.dump(2);
}

}  // namespace ctraj
