#include <doctest.h>

#include "ctraj/wkb.hpp"

#include <random>

using namespace ctraj;

namespace {

CVector c1(Complex z) { return CVector::Constant(1, z); }

// Printed free-particle closed form for psi0 = exp(-a(x-x0)^2/hbar + i p0 (x-x0)/hbar).
Complex free_exact(double X, double x0, double p0, Complex a, double hbar, double m, double T) {
    const Complex den = 1.0 + 2.0 * kI * a * T / m;
    const double y = X - x0 - p0 * T / m;
    return std::exp(-a * y * y / (hbar * den) + kI * p0 * y / hbar + kI * p0 * p0 * T / (2.0 * hbar * m)) /
           std::sqrt(den);
}

}  // namespace

TEST_CASE("state_size reproduces the tabulated counts") {
    const int table[3][3] = {{4, 9, 16}, {7, 22, 50}, {11, 46, 130}};
    for (int d = 1; d <= 3; ++d) {
        for (int n = 1; n <= 3; ++n) CHECK(state_size(n, d) == table[d - 1][n - 1]);
    }
    for (int n = 1; n <= 8; ++n) {
        CHECK(state_size(n, 1) == (n + 1) * (n + 1));
        CHECK(6 * state_size(n, 2) == (n + 1) * (n + 2) * (4 * n + 3));
        CHECK(6 * state_size(n, 3) == (n + 1) * (n + 2) * (2 * n * n + 6 * n + 3));
    }
    for (int d = 1; d <= 12; ++d) {
        const std::int64_t d2 = d * d, d3 = d2 * d, d4 = d3 * d, d5 = d4 * d, d6 = d5 * d;
        CHECK(2 * state_size(1, d) == d2 + 3 * d + 4);
        CHECK(24 * state_size(2, d) == d4 + 10 * d3 + 47 * d2 + 86 * d + 72);
        CHECK(720 * state_size(3, d) == d6 + 21 * d5 + 205 * d4 + 1035 * d3 + 3034 * d2 + 4344 * d + 2880);
    }
    CHECK_THROWS_AS(state_size(0, 1), Error);
}

TEST_CASE("hierarchy carries exactly D(n,d) functions") {
    for (int d = 1; d <= 3; ++d) {
        for (int n = 1; n <= 3; ++n) {
            if (!wkb_supported(n, d)) {
                CHECK_THROWS_AS(Hierarchy::wkb(n, RVector::Ones(d)), Error);
                continue;
            }
            CHECK(Hierarchy::wkb(n, RVector::Ones(d)).scalar_count() == state_size(n, d));
        }
    }
}

TEST_CASE("generic hierarchy matches index-form equations (2D, n=2, diagonal masses)") {
    RVector masses(2);
    masses << 1.3, 0.7;
    const RVector w = masses.cwiseInverse();
    const auto H = Hierarchy::wkb(2, masses);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Complex> F(H.flat_size());
    for (auto& z : F) z = Complex(u(rng), u(rng));
    const PotentialModel V(PotentialKind::Polynomial, {{"c4_0", 0.3}, {"c1_3", -0.2}, {"c2_2", 0.1}, {"c3_1", 0.4}}, 2);
    CVector x(2);
    x << Complex(0.3, 0.2), Complex(-0.4, 0.1);
    const auto Vd = V.eval_derivs(x, 4);
    std::vector<Complex> dF;
    H.rhs(F, Vd, dF);

    auto s = [&](int k, std::initializer_list<int> idx) {
        MultiIndex a{};
        for (int i : idx) ++a[i];
        return F[H.index(k, a)];
    };
    auto ds = [&](int k, std::initializer_list<int> idx) {
        MultiIndex a{};
        for (int i : idx) ++a[i];
        return dF[H.index(k, a)];
    };
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            Complex e = -Vd.at({i, j});
            for (int p = 0; p < 2; ++p) e -= w[p] * s(0, {i, p}) * s(0, {j, p});
            worst = std::max(worst, std::abs(ds(0, {i, j}) - e));
            for (int k = 0; k < 2; ++k) {
                Complex e3 = -Vd.at({i, j, k});
                for (int p = 0; p < 2; ++p) {
                    e3 -= w[p] * (s(0, {i, p}) * s(0, {j, k, p}) + s(0, {j, p}) * s(0, {i, k, p}) +
                                  s(0, {k, p}) * s(0, {i, j, p}));
                }
                worst = std::max(worst, std::abs(ds(0, {i, j, k}) - e3));
                for (int l = 0; l < 2; ++l) {
                    Complex e4 = -Vd.at({i, j, k, l});
                    for (int p = 0; p < 2; ++p) {
                        e4 -= w[p] * (s(0, {i, p}) * s(0, {j, k, l, p}) + s(0, {j, p}) * s(0, {i, k, l, p}) +
                                      s(0, {k, p}) * s(0, {i, j, l, p}) + s(0, {l, p}) * s(0, {i, j, k, p}) +
                                      s(0, {i, j, p}) * s(0, {k, l, p}) + s(0, {i, k, p}) * s(0, {j, l, p}) +
                                      s(0, {i, l, p}) * s(0, {j, k, p}));
                    }
                    worst = std::max(worst, std::abs(ds(0, {i, j, k, l}) - e4));
                }
            }
            // S1 second derivatives
            Complex e12(0.0);
            for (int p = 0; p < 2; ++p) {
                e12 += -w[p] * (s(0, {i, j, p}) * s(1, {p}) + s(0, {i, p}) * s(1, {j, p}) + s(0, {j, p}) * s(1, {i, p})) +
                       0.5 * kI * w[p] * s(0, {i, j, p, p});
            }
            worst = std::max(worst, std::abs(ds(1, {i, j}) - e12));
        }
        Complex e11(0.0);
        for (int p = 0; p < 2; ++p) e11 += -w[p] * s(0, {i, p}) * s(1, {p}) + 0.5 * kI * w[p] * s(0, {i, p, p});
        worst = std::max(worst, std::abs(ds(1, {i}) - e11));
    }
    Complex e10(0.0), e20(0.0);
    for (int p = 0; p < 2; ++p) {
        e10 += 0.5 * kI * w[p] * s(0, {p, p});
        e20 += -0.5 * w[p] * s(1, {p}) * s(1, {p}) + 0.5 * kI * w[p] * s(1, {p, p});
    }
    worst = std::max(worst, std::abs(ds(1, {}) - e10));
    worst = std::max(worst, std::abs(ds(2, {}) - e20));
    // chain 0, order 0 and 1: Lagrangian rate and force
    Complex lag = -Vd.value();
    for (int p = 0; p < 2; ++p) lag += 0.5 * w[p] * s(0, {p}) * s(0, {p});
    worst = std::max(worst, std::abs(ds(0, {}) - lag));
    worst = std::max(worst, std::abs(ds(0, {0}) + Vd.at({0})));
    CHECK(worst < 1e-13);
}

TEST_CASE("free particle: S1 = (i/2) log(1 + 2iaT/m), higher orders vanish") {
    const double m = 1.4, T = 1.7;
    const Complex a(0.6, -0.3);
    SInit s(GaussianPacket::one_d(0.2, 0.9, a, 1.0, m));
    const auto run = evolve_wkb(c1({0.4, -0.2}), PotentialModel::free(1), s, 3, T);
    CHECK(std::abs(run.state.S[1] - 0.5 * kI * std::log(1.0 + 2.0 * kI * a * T / m)) < 1e-10);
    CHECK(std::abs(run.state.S[2]) < 1e-12);
    CHECK(std::abs(run.state.S[3]) < 1e-12);
    CHECK(run.state.scalar_count == 16);
}

TEST_CASE("harmonic: S2 and S3 vanish") {
    SInit s(GaussianPacket::one_d(-0.3, 0.5, {0.5, 0.1}, 1.0, 1.0));
    const auto run = evolve_wkb(c1({0.1, 0.3}), PotentialModel::harmonic(1.3), s, 3, 2.0);
    CHECK(std::abs(run.state.S[2]) < 1e-12);
    CHECK(std::abs(run.state.S[3]) < 1e-12);
    for (int n = 1; n <= 2; ++n) {
        RVector masses(2);
        masses << 1.0, 2.0;
        CMatrix W = CMatrix::Identity(2, 2) * Complex(0.8, 0.1);
        SInit s2(GaussianPacket(RVector::Zero(2), RVector::Ones(2), W, 1.0, masses));
        CVector x0(2);
        x0 << Complex(0.1, 0.2), Complex(-0.2, 0.1);
        const auto r2 = evolve_wkb(x0, PotentialModel::harmonic(1.0, 2), s2, n, 1.5);
        if (n == 2) CHECK(std::abs(r2.state.S[2]) < 1e-12);
    }
}

TEST_CASE("S1 agrees with the Jacobi log-determinant; chains close") {
    const auto model = PotentialModel::quartic(1.0, 0.1);
    SInit s(GaussianPacket::one_d(-0.5, 0.8, {0.5, 0.2}, 1.0, 1.0));
    const CVector x0 = c1({0.2, 0.15});
    const auto r1 = evolve_wkb(x0, model, s, 1, 2.0);
    const auto r2 = evolve_wkb(x0, model, s, 2, 2.0);
    const auto r3 = evolve_wkb(x0, model, s, 3, 2.0);
    CHECK(std::abs(std::exp(kI * r1.state.S[1]) * std::exp(0.5 * r1.flow.record.log_det_U.back()) - 1.0) < 1e-8);
    CHECK(std::abs(r2.state.S[1] - r2.state.S1_from_log_det) < 1e-9);
    CHECK(std::abs(r1.state.S[0] - r2.state.S[0]) < 1e-9);
    CHECK(std::abs(r1.state.S[1] - r2.state.S[1]) < 1e-9);
    CHECK(std::abs(r2.state.S[2] - r3.state.S[2]) < 1e-9);
}

TEST_CASE("1D n=3 derivative tensors agree with finite differences across targets") {
    const auto model = PotentialModel::quartic(1.0, 0.1);
    SInit s(GaussianPacket::one_d(-0.5, 0.8, {0.5, 0.2}, 1.0, 1.0));
    const double T = 1.5, X = 0.4, h = 1e-3;
    DynamicsOptions opt;
    opt.ode.rtol = 1e-12;
    opt.ode.atol = 1e-14;
    std::vector<WKBState> st;
    CVector guess = free_particle_start(c1(X), s, T);
    for (int k = -2; k <= 2; ++k) {
        const auto b = shoot_for_target(c1(X + k * h), guess, model, s, T, {}, opt);
        st.push_back(evolve_wkb(b.x_start, model, s, 3, T, opt, 1).state);
    }
    auto fd = [&](auto get) {
        return (get(st[0]) - 8.0 * get(st[1]) + 8.0 * get(st[3]) - get(st[4])) / (12.0 * h);
    };
    // d/dX of the order-r entry equals the order-(r+1) entry, chain by chain.
    for (int k = 0; k <= 3; ++k) {
        for (int r = 0; r < 2 * (3 - k); ++r) {
            const Complex num = fd([&](const WKBState& w) { return w.derivs[k][r][0]; });
            const Complex ana = st[2].derivs[k][r + 1][0];
            CHECK(std::abs(num - ana) < 1e-6 * (1.0 + std::abs(ana)));
        }
    }
}

TEST_CASE("wave function: free particle exact, T = 0 gives psi0, harmonic n=1 vs n=2") {
    const double m = 1.0, hbar = 0.7, T = 1.3;
    const Complex a(0.5, 0.25);
    SInit s(GaussianPacket::one_d(-0.4, 0.6, a, hbar, m));
    for (double X : {-2.0, -0.5, 0.3, 1.7}) {
        const auto b = shoot_for_target(c1(X), c1(0.0), PotentialModel::free(1), s, T);
        const auto st = evolve_wkb(b, PotentialModel::free(1), s, 1);
        const Complex exact = free_exact(X, -0.4, 0.6, a, hbar, m, T);
        CHECK(std::abs(wkb_wavefunction_branch(st, hbar) - exact) < 1e-10 * std::abs(exact));
        CHECK(std::abs(classical_wavefunction(b.trajectory, s, hbar) - exact) < 1e-10 * std::abs(exact));

        const auto r0 = evolve_wkb(c1(X), PotentialModel::quartic(1.0, 0.1), s, 2, 0.0);
        CHECK(std::abs(wkb_wavefunction_branch(r0.state, hbar) - s.packet().psi(c1(X))) < 1e-15);

        const auto bh = shoot_for_target(c1(X), c1(0.0), PotentialModel::harmonic(1.0), s, T);
        const auto w1 = evolve_wkb(bh, PotentialModel::harmonic(1.0), s, 1);
        const auto w2 = evolve_wkb(bh, PotentialModel::harmonic(1.0), s, 2);
        const Complex p1 = wkb_wavefunction_branch(w1, hbar), p2 = wkb_wavefunction_branch(w2, hbar);
        CHECK(std::abs(p1 - p2) < 1e-10 * std::abs(p1));
    }
}
