#include "ctraj/propagator.hpp"
#include "ctraj/ode.hpp"
#include "ctraj/parallel.hpp"

#include <algorithm>
#include <numbers>
#include <optional>

namespace ctraj {

namespace {

void check_query(const PropagatorQuery& q) {
    const auto& a = q.initial;
    const auto& b = q.final;
    if (a.dimension() != b.dimension() || q.model.dimension() != a.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "packets and potential must share the dimension");
    }
    if (a.hbar != b.hbar) throw Error(ErrorCode::InvalidArgument, "packets must share hbar");
    if (!a.scalar_mass() || !b.scalar_mass() || a.mass() != b.mass()) {
        throw Error(ErrorCode::InvalidArgument, "propagator needs one scalar mass shared by both packets");
    }
    if (!(q.T >= 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be non-negative");
}

// conj(psi_f(conj z)): the analytic continuation of psi_f^* off the real axis.
GaussianPacket conjugate_packet(const GaussianPacket& p) {
    GaussianPacket c = p;
    c.width = p.width.conjugate();
    c.p0 = -p.p0;
    return c;
}

struct Residual {
    CVector r;
    CMatrix J;
};

Residual residual(const PropagatorQuery& q, const SInit& si, const CVector& x0, const DynamicsOptions& dyn) {
    const auto f = integrate_flow(x0, q.model, si, q.T, nullptr, dyn, 1);
    const double m = q.initial.mass();
    const CMatrix Wf = q.final.width.conjugate();
    const auto& rec = f.record;
    Residual out;
    out.r = m * rec.v.back() - q.final.p0.cast<Complex>() + kI * m * Wf * (rec.x.back() - q.final.x0.cast<Complex>());
    out.J = m * rec.Udot.back() + kI * m * Wf * rec.U.back();
    return out;
}

// Integrates x together with the two fundamental Jacobi solutions on the record's times.
void jacobi_pair(const PropagatorQuery& q, TwoSidedBranch& b, const DynamicsOptions& dyn) {
    const int d = q.initial.dimension();
    const double m = q.initial.mass();
    const int dd = d * d;
    enum { X = 0 };
    const int V = d, U1 = 2 * d, U1D = U1 + dd, U2 = U1D + dd, U2D = U2 + dd, SIZE = U2D + dd;
    auto mat = [&](const CVector& y, int off) { return Eigen::Map<const CMatrix>(y.data() + off, d, d); };
    OdeRhs rhs = [&](double, const CVector& y, CVector& dy) {
        dy.setZero(SIZE);
        const auto D = q.model.eval_derivs(y.segment(X, d), 2);
        const CMatrix H = D.hessian();
        dy.segment(X, d) = y.segment(V, d);
        dy.segment(V, d) = -D.gradient() / m;
        Eigen::Map<CMatrix>(dy.data() + U1, d, d) = mat(y, U1D);
        Eigen::Map<CMatrix>(dy.data() + U1D, d, d) = -H * mat(y, U1) / m;
        Eigen::Map<CMatrix>(dy.data() + U2, d, d) = mat(y, U2D);
        Eigen::Map<CMatrix>(dy.data() + U2D, d, d) = -H * mat(y, U2) / m;
    };
    CVector y0 = CVector::Zero(SIZE);
    y0.segment(X, d) = b.x_start;
    y0.segment(V, d) = b.trajectory.v.front();
    Eigen::Map<CMatrix>(y0.data() + U1, d, d) = CMatrix::Identity(d, d);
    Eigen::Map<CMatrix>(y0.data() + U2D, d, d) = CMatrix::Identity(d, d);

    const CMatrix Wi = q.initial.width;
    const CMatrix Wf = q.final.width.conjugate();
    auto wronskian = [&](const CVector& y) -> CMatrix {
        return mat(y, U1D).transpose() * mat(y, U2) - mat(y, U1).transpose() * mat(y, U2D);
    };
    auto pform = [&](const CVector& y) -> CMatrix {
        return mat(y, U1D) + kI * mat(y, U2D) * Wi + kI * Wf * mat(y, U1) - Wf * mat(y, U2) * Wi;
    };
    const CMatrix W0 = wronskian(y0);

    // log det at t = 0: sum of log(i lambda) over eigenvalues of Om_i + Om_f^*
    const Eigen::ComplexEigenSolver<CMatrix> es(Wi + Wf, false);
    Complex logdet = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) logdet += Complex(0.0, 0.5 * std::numbers::pi) + std::log(es.eigenvalues()[k]);
    Complex prev_det = pform(y0).determinant();

    double drift = 0.0;
    DormandPrince ode(dyn.ode);
    const auto& times = b.trajectory.times;
    CVector yT = y0;
    if (q.T > 0.0) {
        yT = ode.integrate(rhs, y0, times, [&](std::size_t, double, const CVector& y) {
            drift = std::max(drift, (wronskian(y) - W0).norm());
            const Complex det = pform(y).determinant();
            logdet += std::log(det / prev_det);
            prev_det = det;
        });
    }
    b.U1 = mat(yT, U1);
    b.U1dot = mat(yT, U1D);
    b.U2 = mat(yT, U2);
    b.U2dot = mat(yT, U2D);
    b.wronskian_drift = drift;
    b.log_det = logdet;
}

}  // namespace

TwoSidedBranch solve_two_sided(const PropagatorQuery& query, const CVector& guess, const ShootingOptions& shooting,
                               const DynamicsOptions& dynamics) {
    check_query(query);
    if (!all_finite(guess)) throw Error(ErrorCode::InvalidArgument, "guess is not finite");
    const SInit si(query.initial);
    auto eval = [&](const CVector& x0) -> std::optional<Residual> {
        try {
            auto r = residual(query, si, x0, dynamics);
            if (!all_finite(r.r)) return std::nullopt;
            return r;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IntegrationFailure) return std::nullopt;
            throw;
        }
    };
    // residual is measured in momentum units; scale the tolerance by m
    const double tol = shooting.tol * std::max(1.0, query.initial.mass());
    CVector x = guess;
    auto cur = eval(x);
    if (!cur) throw Error(ErrorCode::NoConvergence, "trajectory from the initial guess cannot be integrated");
    int it = 0;
    while (cur->r.norm() > tol) {
        if (it >= shooting.max_iterations) throw Error(ErrorCode::NoConvergence, "two-sided shooting did not converge");
        ++it;
        if (std::abs(cur->J.determinant()) < shooting.singular_threshold) {
            throw Error(ErrorCode::SingularJacobian, "boundary-map Jacobian vanishes");
        }
        const CVector step = cur->J.partialPivLu().solve(cur->r);
        bool accepted = false;
        double lambda = 1.0;
        for (int h = 0; h <= shooting.max_halvings; ++h, lambda *= 0.5) {
            const CVector trial = x - lambda * step;
            auto next = eval(trial);
            if (next && next->r.norm() < cur->r.norm()) {
                x = trial;
                cur = std::move(next);
                accepted = true;
                break;
            }
        }
        if (!accepted) throw Error(ErrorCode::NoConvergence, "damped step failed to reduce the boundary residual");
    }
    TwoSidedBranch b;
    b.x_start = x;
    b.residual = cur->r.norm();
    b.iterations = it;
    b.trajectory = integrate_flow(x, query.model, si, query.T, nullptr, dynamics, dynamics.samples).record;
    jacobi_pair(query, b, dynamics);
    return b;
}

std::vector<TwoSidedBranch> two_sided_search(const PropagatorQuery& query, const SearchOptions& search,
                                             const ShootingOptions& shooting, const DynamicsOptions& dynamics) {
    check_query(query);
    const SInit si(query.initial);
    const int d = query.initial.dimension();
    // Affine root for V = 0: x(T) = x0 + T v0(x0) inserted into the final condition.
    const double m = query.initial.mass();
    const CMatrix Wi = query.initial.width, Wf = query.final.width.conjugate();
    const CMatrix I = CMatrix::Identity(d, d);
    const CVector xi = query.initial.x0.cast<Complex>(), xf = query.final.x0.cast<Complex>();
    const CVector pi = query.initial.p0.cast<Complex>(), pf = query.final.p0.cast<Complex>();
    // v0 = (pi + i m Wi (x0 - xi))/m; r = m v0 - pf + i m Wf (x0 + T v0 - xf)
    const CMatrix A = kI * m * Wi + kI * m * Wf * (I + kI * query.T * Wi);
    const CVector c = pi - kI * m * Wi * xi - pf + kI * m * Wf * (query.T / m * (pi - kI * m * Wi * xi) - xf);
    const CVector affine = A.partialPivLu().solve(-c);

    SearchOptions s = search;
    s.free_guess = false;
    s.warm_guesses.insert(s.warm_guesses.begin(), affine);
    auto guesses = search_guesses(affine, si, query.T, s);
    if (d > 1) {
        // lattice points come back as offsets from the free-particle root of the one-sided
        // problem; move them onto the affine root instead
        const CVector shift = affine - free_particle_start(affine, si, query.T);
        for (std::size_t k = s.warm_guesses.size(); k < guesses.size(); ++k) guesses[k] += shift;
    }
    std::vector<std::optional<TwoSidedBranch>> found(guesses.size());
    parallel_for(guesses.size(), [&](std::size_t k) {
        try {
            found[k] = solve_two_sided(query, guesses[k], shooting, dynamics);
        } catch (const Error&) {
        }
    });
    std::vector<TwoSidedBranch> out;
    for (auto& f : found) {
        if (!f) continue;
        bool dup = false;
        for (const auto& o : out) dup = dup || (o.x_start - f->x_start).norm() < search.dedup_tol;
        if (!dup) out.push_back(std::move(*f));
    }
    std::stable_sort(out.begin(), out.end(), [](const TwoSidedBranch& a, const TwoSidedBranch& b) {
        return a.x_start.imag().norm() < b.x_start.imag().norm();
    });
    return out;
}

OverlapResult coherent_overlap(const PropagatorQuery& query, std::vector<TwoSidedBranch>& branches,
                               double caustic_threshold) {
    check_query(query);
    const int d = query.initial.dimension();
    const double m = query.initial.mass(), hbar = query.initial.hbar;
    const GaussianPacket fconj = conjugate_packet(query.final);
    const Complex log_pref = 0.5 * d * std::log(Complex(0.0, 2.0 * std::numbers::pi * hbar / m));
    OverlapResult out;
    for (auto& b : branches) {
        if (std::abs(std::exp(b.log_det)) < caustic_threshold) {
            throw Error(ErrorCode::CausticAtT, "overlap determinant vanishes on a branch");
        }
        const auto& rec = b.trajectory;
        const Complex expo = std::log(fconj.psi(rec.x.back())) + kI * rec.action.back() / hbar +
                             std::log(query.initial.psi(rec.x.front()));
        b.contribution = std::exp(log_pref + expo - 0.5 * b.log_det);
        out.P += b.contribution;
    }
    out.branches = branches.size();
    out.P_normalized = out.P / (query.initial.norm() * query.final.norm());
    return out;
}

Complex free_particle_overlap_exponent(const PropagatorQuery& q) {
    if (q.initial.dimension() != 1) throw Error(ErrorCode::DimensionMismatch, "closed form is scalar");
    const double m = q.initial.mass(), hbar = q.initial.hbar, T = q.T;
    const double xi = q.initial.x0[0], pi = q.initial.p0[0], xf = q.final.x0[0], pf = q.final.p0[0];
    const Complex oi = q.initial.width(0, 0), of = std::conj(q.final.width(0, 0));
    const Complex den = oi + of + kI * T * oi * of;
    const Complex num = (pi - pf) * (pi - pf) + m * m * oi * of * (xi - xf) * (xi - xf) +
                        kI * T * (pi * pi * of + pf * pf * oi) + 2.0 * kI * m * (xi - xf) * (pi * of + pf * oi);
    return std::exp(-num / (2.0 * hbar * m * den));
}

Complex free_particle_overlap_exact(const PropagatorQuery& q) {
    if (q.initial.dimension() != 1) throw Error(ErrorCode::DimensionMismatch, "closed form is scalar");
    const double m = q.initial.mass(), hbar = q.initial.hbar;
    const Complex oi = q.initial.width(0, 0), of = std::conj(q.final.width(0, 0));
    const Complex den = oi + of + kI * q.T * oi * of;
    return std::sqrt(2.0 * std::numbers::pi * hbar / (m * den)) * free_particle_overlap_exponent(q);
}

}  // namespace ctraj
