#include <doctest.h>

#include "ctraj/path_checks.hpp"

#include <cmath>

using namespace ctraj;

namespace {

CVector c1(Complex z) { return CVector::Constant(1, z); }

SInit packet(Complex a, double hbar = 0.05) { return SInit(GaussianPacket::one_d(0.0, 0.0, a, hbar, 1.0)); }

CMatrix random_symmetric(int n, unsigned seed) {
    std::srand(seed);
    CMatrix A = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double re = (std::rand() / double(RAND_MAX) - 0.5) * 0.4;
            const double im = (std::rand() / double(RAND_MAX) - 0.5) * 0.8;
            A(i, j) = A(j, i) = Complex(re, im);
        }
        A(i, i) += 1.5;
    }
    return A;
}

}  // namespace

TEST_CASE("free particle: D_N = 1 + 2iaT/m for every N") {
    const Complex a{0.4, 0.0};
    const double T = 1.3;
    for (int N : {2, 3, 4, 17, 64}) {
        const auto r = discrete_determinant(c1(0.2), PotentialModel::free(1), packet(a), T, N);
        CHECK(std::abs(r.D_N - (1.0 + 2.0 * kI * a * T)) < 1e-12);
    }
}

TEST_CASE("D_N converges at second order") {
    for (const auto& model : {PotentialModel::harmonic(1.0), PotentialModel::quartic(1.0, 0.1)}) {
        const auto s = packet({0.5, 0.1});
        const CVector x0 = c1({0.3, 0.05});
        const double e1 = discrete_determinant(x0, model, s, 1.0, 64).error;
        const double e2 = discrete_determinant(x0, model, s, 1.0, 128).error;
        const double e3 = discrete_determinant(x0, model, s, 1.0, 256).error;
        CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
        CHECK(std::log2(e2 / e3) == doctest::Approx(2.0).epsilon(0.15));
    }
    const auto coarse = discrete_determinant(c1(0.3), PotentialModel::quartic(1.0, 0.1), packet(0.5), 1.0, 4);
    CHECK(std::isfinite(coarse.D_N.real()));
    CHECK(std::isfinite(coarse.D_N.imag()));
}

TEST_CASE("minors and dense matrix agree") {
    const auto A = path_matrix(c1(0.1), PotentialModel::quartic(1.0, 0.2), packet({0.4, 0.2}), 1.0, 6);
    const auto D = A.minors();
    const CMatrix M = A.dense();
    for (int k = 1; k <= 6; ++k) CHECK(std::abs(D[k - 1] - M.topLeftCorner(k, k).determinant()) < 1e-12);
    CHECK(M(0, 1) == Complex(-1.0, 0.0));
    CHECK(M(1, 0) == Complex(-1.0, 0.0));
}

TEST_CASE("inverse limit") {
    const double T = 1.0;
    const int N = 200;
    // a -> 0: continuum is T - max(t_i, t_j)
    const auto f = inverse_limit_check(c1(0.0), PotentialModel::free(1), packet(1e-12), T, N, 40, 120);
    CHECK(f.continuum.real() == doctest::Approx(T - 120.0 * T / N).epsilon(1e-9));
    CHECK(f.relative_error < 5.0 / N);

    const auto h = inverse_limit_check(c1({0.3, 0.1}), PotentialModel::harmonic(1.0), packet({0.5, 0.0}), T, N, 50, 90);
    CHECK(h.relative_error < 0.05);

    const auto last = inverse_limit_check(c1(0.0), PotentialModel::free(1), packet(1e-12), T, N, N - 1, N - 1);
    CHECK(std::abs(last.continuum) == doctest::Approx(T / N).epsilon(1e-6));
    CHECK(std::abs(last.discrete) < 2.0 * T / N);
}

TEST_CASE("gaussian moments: closed forms") {
    CMatrix D = CMatrix::Zero(2, 2);
    D(0, 0) = 2.0;
    D(1, 1) = Complex(1.0, 0.5);
    const int N = 2;
    CHECK(std::abs(gaussian_moment(D, MomentPattern::I3J, 0, 1)) == 0.0);
    const Complex expect = -3.0 / double(N * N) * inv_sqrt_det(D) * std::pow(1.0 / D(1, 1), 2);
    CHECK(std::abs(gaussian_moment(D, MomentPattern::I4, 1, 1) - expect) < 1e-14);
    CHECK(std::abs(inv_sqrt_det(D) * inv_sqrt_det(D) * D.determinant() - 1.0) < 1e-14);
}

TEST_CASE("gaussian moments match contour quadrature") {
    CMatrix A(2, 2);
    A << 2.0, -1.0, -1.0, 2.0;
    for (auto p : {MomentPattern::I4, MomentPattern::I3J3, MomentPattern::IJ, MomentPattern::I3J}) {
        const Complex c = gaussian_moment(A, p, 0, 1), q = gaussian_moment_quadrature(A, p, 0, 1);
        CHECK(std::abs(c - q) < 1e-6 * std::abs(c));
    }
    const Complex ij = gaussian_moment(A, MomentPattern::IJ, 0, 0);
    CHECK(std::abs(ij - gaussian_moment_quadrature(A, MomentPattern::IJ, 0, 0)) < 1e-6 * std::abs(ij));

    const CMatrix B = random_symmetric(3, 7);
    for (auto p : {MomentPattern::I4, MomentPattern::I3J3, MomentPattern::IJ, MomentPattern::I3J}) {
        const Complex c = gaussian_moment(B, p, 2, 0), q = gaussian_moment_quadrature(B, p, 2, 0);
        CHECK(std::abs(c - q) < 1e-6 * std::abs(c));
    }
    CMatrix S = CMatrix::Zero(2, 2);
    CHECK_THROWS_AS(gaussian_moment(S, MomentPattern::IJ, 0, 0), Error);
}

TEST_CASE("first order factor") {
    const auto s = packet({0.5, 0.0});
    for (const auto& model : {PotentialModel::free(1), PotentialModel::harmonic(1.0)}) {
        const auto f = first_order_factor(c1({0.2, 0.1}), model, s, 1.0, 0.05);
        CHECK(f.factor == Complex(1.0, 0.0));
    }
    const auto q = first_order_factor(c1({0.3, 0.05}), PotentialModel::quartic(1.0, 0.1), s, 1.0, 0.05);
    CHECK(q.relative_error < 1e-4);
    CHECK(std::abs(q.S2_nested - q.S2_hierarchy) < 1e-6 * std::abs(q.S2_hierarchy));
    CHECK(q.quadrature_error < 1e-8);
    CHECK_NOTHROW(verify_first_order_factor(c1({0.3, 0.05}), PotentialModel::quartic(1.0, 0.1), s, 1.0, 0.05));
}

TEST_CASE("stirling") {
    for (double n : {2.0, 7.0, 50.0, 1000.0}) {
        const auto r = stirling_modified(n, n, n);
        CHECK(r.correction == doctest::Approx(1.0 / (12.0 * n)).epsilon(1e-13));
    }
    for (double n : {5.0, 10.0, 20.0}) {
        const auto r = stirling_modified(n, n, n);
        CHECK(r.corrected_error < r.leading_error);
    }
    CHECK(log_factorial_quadrature(10.0) == doctest::Approx(std::lgamma(11.0)).epsilon(1e-10));
    CHECK(std::isfinite(stirling_modified(1e6, 1e6, 1e6).log_corrected));
}

TEST_CASE("stirling: total error is second order for shifted parameters") {
    for (auto [c1, c2] : {std::pair{1.0, -2.0}, std::pair{-2.0, 2.0}, std::pair{0.5, 1.5}}) {
        const double n = 200.0;
        const double e1 = stirling_modified(n, n + c1, n + c2).corrected_error;
        const double e2 = stirling_modified(2 * n, 2 * n + c1, 2 * n + c2).corrected_error;
        CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
    }
}

TEST_CASE("check report json") {
    const auto text = reports_to_json({{"stirling", "{\"n\":10}", 1e-3, 1e-2, true}});
    CHECK(text.find("\"stirling\"") != std::string::npos);
    CHECK(text.find("\"passed\": true") != std::string::npos);
}
