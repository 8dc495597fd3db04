#include "ctraj/bomca.hpp"
#include "ctraj/quadrature.hpp"

#include <algorithm>
#include <optional>

namespace ctraj {

bool bomca_supported(int n, int d) { return d >= 1 && d <= kMaxDim && (n == 1 || (n == 2 && d <= 2)); }

BOMCARun evolve_bomca(const CVector& x_start, const PotentialModel& model, const SInit& sinit, int n, double T,
                      const DynamicsOptions& options, std::size_t intervals) {
    Hierarchy h = Hierarchy::bomca(n, sinit.packet().masses, sinit.packet().hbar);
    auto flow = integrate_flow(x_start, model, sinit, T, &h, options, intervals == 0 ? options.samples : intervals);
    BOMCAState st;
    st.order = n;
    st.dim = h.dim();
    st.T = T;
    st.x = flow.record.x_end();
    st.v = flow.record.v.back();
    const auto& F = flow.derivs.back();
    st.S = F[h.index(0, 0, 0)];
    const auto& lay = layouts_for(h.dim());
    for (int r = 0; r <= h.max_order(0); ++r) {
        std::vector<Complex> t(lay[r].size());
        for (int o = 0; o < lay[r].size(); ++o) t[o] = F[h.index(0, r, o)];
        st.derivs.push_back(std::move(t));
    }
    st.scalar_count = h.scalar_count() + h.dim();
    return {std::move(st), std::move(flow), std::move(h)};
}

Branch bomca_shoot(const CVector& X, const CVector& guess, const PotentialModel& model, const SInit& sinit, int n,
                   double T, const ShootingOptions& shooting, const DynamicsOptions& dynamics) {
    if (!all_finite(guess)) throw Error(ErrorCode::InvalidArgument, "guess is not finite");
    const int d = static_cast<int>(guess.size());
    const Hierarchy h = Hierarchy::bomca(n, sinit.packet().masses, sinit.packet().hbar);

    auto endpoint = [&](const CVector& x0) -> std::optional<CVector> {
        try {
            auto f = integrate_flow(x0, model, sinit, T, &h, dynamics, 1);
            if (!all_finite(f.record.x_end())) return std::nullopt;
            return f.record.x_end();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IntegrationFailure || e.code() == ErrorCode::RiccatiBlowup) return std::nullopt;
            throw;
        }
    };

    CVector x = guess;
    auto xT = endpoint(x);
    if (!xT) throw Error(ErrorCode::NoConvergence, "BOMCA trajectory from the initial guess cannot be integrated");
    double res = (*xT - X).norm();
    int it = 0;
    while (res > shooting.tol) {
        if (it >= shooting.max_iterations) {
            throw Error(ErrorCode::NoConvergence, "BOMCA shooting did not converge, residual " + std::to_string(res));
        }
        ++it;
        CMatrix J(d, d);
        const double eps = 1e-6 * (1.0 + x.norm());
        for (int j = 0; j < d; ++j) {
            CVector xp = x;
            xp[j] += eps;
            auto yp = endpoint(xp);
            if (!yp) throw Error(ErrorCode::NoConvergence, "finite-difference Jacobian failed");
            J.col(j) = (*yp - *xT) / eps;
        }
        if (std::abs(J.determinant()) < shooting.singular_threshold) {
            throw Error(ErrorCode::SingularJacobian, "BOMCA endpoint map is singular");
        }
        const CVector step = J.partialPivLu().solve(*xT - X);
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k <= shooting.max_halvings; ++k, lambda *= 0.5) {
            const CVector trial = x - lambda * step;
            auto yt = endpoint(trial);
            if (yt && (*yt - X).norm() < res) {
                x = trial;
                xT = yt;
                res = (*yt - X).norm();
                accepted = true;
                break;
            }
        }
        if (!accepted) throw Error(ErrorCode::NoConvergence, "damped BOMCA Newton step failed");
    }
    Branch b;
    b.x_start = x;
    b.residual = res;
    b.iterations = it;
    if (shooting.dense_result) b.trajectory = integrate_flow(x, model, sinit, T, &h, dynamics, dynamics.samples).record;
    return b;
}

Complex bomca_wavefunction_branch(const BOMCAState& state, double hbar) { return std::exp(kI * state.S / hbar); }

namespace {

struct Dense1D {
    double h;
    double m;
    double hbar;
    std::vector<Complex> S2, S3, S4, V2, V3, V4;
};

Dense1D dense_1d(const BOMCARun& run, const PotentialModel& model) {
    const auto& H = run.hierarchy;
    if (H.dim() != 1 || H.order() != 2) {
        throw Error(ErrorCode::InvalidArgument, "f representation needs a one-dimensional n = 2 BOMCA run");
    }
    const auto& rec = run.flow.record;
    if (rec.size() < 5) throw Error(ErrorCode::InvalidArgument, "f representation needs dense output");
    Dense1D d;
    d.h = rec.times[1] - rec.times[0];
    d.m = rec.masses[0];
    d.hbar = H.hbar();
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const auto& F = run.flow.derivs[k];
        d.S2.push_back(F[H.index(0, 2, 0)]);
        d.S3.push_back(F[H.index(0, 3, 0)]);
        d.S4.push_back(F[H.index(0, 4, 0)]);
        const auto V = model.eval_derivs(rec.x[k], 4);
        d.V2.push_back(V.tensors[2][0]);
        d.V3.push_back(V.tensors[3][0]);
        d.V4.push_back(V.tensors[4][0]);
    }
    return d;
}

double max_abs(const std::vector<Complex>& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}

double relative(double err, double scale) { return scale > 0.0 ? err / scale : err; }

}  // namespace

QCorrectionProfile bomca_native_profile(const BOMCARun& run) {
    const auto& H = run.hierarchy;
    if (H.dim() != 1 || H.order() != 2) throw Error(ErrorCode::InvalidArgument, "profile needs 1D n = 2 BOMCA");
    const auto& rec = run.flow.record;
    const double m = rec.masses[0];
    QCorrectionProfile p;
    p.variant = QVariant::BomcaNative;
    p.times = rec.times;
    const double h = rec.size() > 1 ? rec.times[1] - rec.times[0] : 0.0;
    std::vector<Complex> s2;
    for (const auto& F : run.flow.derivs) s2.push_back(F[H.index(0, 2, 0)] / m);
    const auto logf = cumulative_integral(s2, h);
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const auto& F = run.flow.derivs[k];
        p.f.push_back(std::exp(logf[k]));
        p.N.push_back(0.5 * kI * H.hbar() / (m * m) * F[H.index(0, 3, 0)]);
        p.q.push_back(-0.5 * kI * H.hbar() / m * F[H.index(0, 4, 0)]);
    }
    p.K = run.flow.derivs.front()[H.index(0, 3, 0)];
    p.L = run.flow.derivs.front()[H.index(0, 4, 0)];
    return p;
}

double FRepresentationReport::max_residual() const {
    return std::max({zzz4_residual, fourth_residual, f_equation_residual, q_consistency});
}

FRepresentationReport measure_f_representation(const BOMCARun& run, const PotentialModel& model) {
    const Dense1D d = dense_1d(run, model);
    const std::size_t n = d.S2.size();
    const double m = d.m;
    FRepresentationReport rep;
    rep.K = d.S3.front();
    rep.L = d.S4.front();

    std::vector<Complex> s2m(n);
    for (std::size_t k = 0; k < n; ++k) s2m[k] = d.S2[k] / m;
    const auto logf = cumulative_integral(s2m, d.h);
    std::vector<Complex> f(n), a_src(n), b_src(n), i1_src(n);
    for (std::size_t k = 0; k < n; ++k) {
        f[k] = std::exp(logf[k]);
        const Complex f3 = f[k] * f[k] * f[k];
        a_src[k] = d.V3[k] * f3;
        b_src[k] = f3 * f[k] * (d.V4[k] + 3.0 * d.S3[k] * d.S3[k] / m);
        i1_src[k] = f3 * f[k] * d.V4[k];
    }
    const auto A = cumulative_integral(a_src, d.h);
    const auto B = cumulative_integral(b_src, d.h);

    // third derivative: f^3 S3 = K - int V3 f^3; fourth: f^4 S4 = L - int f^4 (V4 + 3 S3^2/m)
    std::vector<Complex> r4(n), t4(n), r44(n), t44(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Complex f3 = f[k] * f[k] * f[k];
        t4[k] = f3 * d.S3[k];
        r4[k] = t4[k] + A[k] - rep.K;
        t44[k] = f3 * f[k] * d.S4[k];
        r44[k] = t44[k] - rep.L + B[k];
    }
    rep.zzz4_residual = relative(max_abs(r4), std::max(max_abs(t4), max_abs(A)) + std::abs(rep.K));
    rep.fourth_residual = relative(max_abs(r44), std::max(max_abs(t44), max_abs(B)) + std::abs(rep.L));

    // m f'' = -V2 f + (i hbar / 2 m f^3)(L - B), using f' = f S2/m
    std::vector<Complex> fdot(n);
    for (std::size_t k = 0; k < n; ++k) fdot[k] = f[k] * s2m[k];
    const auto fdd = derivative(fdot, d.h);
    std::vector<Complex> rf(n), lhs(n), pot(n);
    for (std::size_t k = 0; k < n; ++k) {
        lhs[k] = m * fdd[k];
        pot[k] = d.V2[k] * f[k];
        const Complex corr = 0.5 * kI * d.hbar / (m * f[k] * f[k] * f[k]) * (rep.L - B[k]);
        rf[k] = lhs[k] + pot[k] - corr;
    }
    // m f'' can vanish identically (free particle); m |f'| / T keeps the scale honest
    const double tspan = d.h * static_cast<double>(n - 1);
    const double natural = tspan > 0.0 ? m * max_abs(fdot) / tspan : 0.0;
    rep.f_equation_residual = relative(max_abs(rf), std::max({max_abs(lhs), max_abs(pot), natural}));

    // Path-integral choice with N != 0 (needs K = L = 0):
    //   q = (i hbar / m f^4)(I1/2 + 3 I3/m),  I3 = int A^2 / (2 f^2),  N = -(i hbar / 2 m^2 f^3) A
    if (rep.K == Complex(0.0) && rep.L == Complex(0.0)) {
        const auto I1 = cumulative_integral(i1_src, d.h);
        std::vector<Complex> i3_src(n);
        for (std::size_t k = 0; k < n; ++k) i3_src[k] = A[k] * A[k] / (2.0 * f[k] * f[k]);
        const auto I3 = cumulative_integral(i3_src, d.h);
        std::vector<Complex> dq(n), qn(n), dN(n), Nn(n);
        for (std::size_t k = 0; k < n; ++k) {
            const Complex f4 = f[k] * f[k] * f[k] * f[k];
            qn[k] = -0.5 * kI * d.hbar / m * d.S4[k];
            dq[k] = qn[k] - kI * d.hbar / (m * f4) * (0.5 * I1[k] + 3.0 * I3[k] / m);
            Nn[k] = 0.5 * kI * d.hbar / (m * m) * d.S3[k];
            dN[k] = Nn[k] + 0.5 * kI * d.hbar / (m * m * f[k] * f[k] * f[k]) * A[k];
        }
        rep.q_consistency = std::max(relative(max_abs(dq), max_abs(qn)), relative(max_abs(dN), max_abs(Nn)));
    }
    return rep;
}

FRepresentationReport verify_f_representation(const BOMCARun& run, const PotentialModel& model, double tolerance) {
    auto rep = measure_f_representation(run, model);
    if (rep.max_residual() > tolerance) {
        throw Error(ErrorCode::ToleranceExceeded,
                    "f representation residual " + std::to_string(rep.max_residual()) + " exceeds tolerance");
    }
    return rep;
}

ClassicalQResult classical_path_q_variant(const Branch& branch, const PotentialModel& model, const SInit& sinit,
                                          double hbar, const DynamicsOptions& options) {
    if (sinit.dimension() != 1) throw Error(ErrorCode::DimensionMismatch, "classical-path q variant is 1D");
    const double m = sinit.packet().masses[0];
    const double T = branch.trajectory.size() ? branch.trajectory.T() : 0.0;

    // The nested integrals of q are carried as extra ODE components:
    // A' = V3 f^3, B' = A/f^2, I1' = f^4 V4, I2' = V3 f^3 B, I3' = A^2/(2 f^2).
    enum { X, Vv, ACT, F, FD, A, B, I1, I2, I3, LOGF, SIZE };
    auto q_of = [&](const CVector& s) {
        const Complex f = s[F];
        const Complex f4 = f * f * f * f;
        return kI * hbar / (m * f4) * (0.5 * s[I1] + s[I2] / m + 5.0 * s[I3] / m);
    };
    OdeRhs rhs = [&](double, const CVector& s, CVector& ds) {
        ds.setZero(SIZE);
        const auto V = model.eval_derivs(s.segment(X, 1), 4);
        const Complex v2 = V.tensors[2][0], v3 = V.tensors[3][0], v4 = V.tensors[4][0];
        const Complex f = s[F];
        const Complex f2 = f * f, f3 = f2 * f;
        ds[X] = s[Vv];
        ds[Vv] = -V.tensors[1][0] / m;
        ds[ACT] = 0.5 * m * s[Vv] * s[Vv] - V.value();
        ds[F] = s[FD];
        ds[FD] = -(v2 + q_of(s)) * f / m;
        ds[A] = v3 * f3;
        ds[B] = s[A] / f2;
        ds[I1] = f3 * f * v4;
        ds[I2] = v3 * f3 * s[B];
        ds[I3] = s[A] * s[A] / (2.0 * f2);
        ds[LOGF] = s[FD] / f;
    };
    CVector y = CVector::Zero(SIZE);
    y[X] = branch.x_start[0];
    y[Vv] = sinit.velocity(branch.x_start)[0];
    y[F] = 1.0;
    y[FD] = sinit.hessian()(0, 0) / m;

    ClassicalQResult out;
    out.profile.variant = QVariant::ClassicalPathQ;
    out.profile.times = uniform_times(T, options.samples);
    const std::size_t ns = out.profile.times.size();
    out.profile.N.assign(ns, Complex(0.0));
    out.profile.q.resize(ns);
    out.profile.f.resize(ns);
    CVector last;
    try {
        DormandPrince ode(options.ode);
        last = ode.integrate(rhs, y, out.profile.times, [&](std::size_t k, double, const CVector& s) {
            out.profile.q[k] = q_of(s);
            out.profile.f[k] = s[F];
        });
    } catch (const Error& e) {
        throw Error(ErrorCode::QuadratureFailure, std::string("nested quadrature along the path failed: ") + e.what());
    }
    out.log_f = last[LOGF];
    out.psi = std::exp(kI * (sinit.value(branch.x_start) + last[ACT]) / hbar - 0.5 * last[LOGF]);
    return out;
}

}  // namespace ctraj
