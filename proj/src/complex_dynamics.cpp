#include "ctraj/complex_dynamics.hpp"
#include "ctraj/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <random>

namespace ctraj {

Complex TrajectoryRecord::energy(std::size_t k, const PotentialModel& model) const {
    Complex kin(0.0);
    for (Eigen::Index j = 0; j < v[k].size(); ++j) kin += 0.5 * masses[j] * v[k][j] * v[k][j];
    return kin + model.value(x[k]);
}

std::string_view to_string(BranchClass c) {
    switch (c) {
        case BranchClass::Contributing: return "contributing";
        case BranchClass::DiscardedLarge: return "discarded_large";
        case BranchClass::CausticAdjacent: return "caustic_adjacent";
        case BranchClass::Duplicate: return "duplicate";
    }
    return "unknown";
}

namespace {

struct StateLayout {
    int d, iv, ia, iu, iud, il, ih, size;
    StateLayout(int dim, int hierarchy_size) : d(dim) {
        iv = d;
        ia = 2 * d;
        iu = ia + 1;
        iud = iu + d * d;
        il = iud + d * d;
        ih = il + 1;
        size = ih + hierarchy_size;
    }
};

CMatrix block(const CVector& y, int at, int d) {
    return Eigen::Map<const CMatrix>(y.data() + at, d, d);
}

}  // namespace

FlowResult integrate_flow(const CVector& x_start, const PotentialModel& model, const SInit& sinit, double T,
                          const Hierarchy* hierarchy, const DynamicsOptions& options, std::size_t intervals) {
    const int d = sinit.dimension();
    if (x_start.size() != d || model.dimension() != d) {
        throw Error(ErrorCode::DimensionMismatch, "start point, potential and packet dimensions differ");
    }
    if (!(T >= 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be non-negative");
    if (!all_finite(x_start)) throw Error(ErrorCode::InvalidArgument, "start point is not finite");
    if (hierarchy && hierarchy->dim() != d) throw Error(ErrorCode::DimensionMismatch, "hierarchy dimension differs");

    const bool bomca = hierarchy && hierarchy->kind() == HierarchyKind::Bomca;
    const int hsize = hierarchy ? hierarchy->flat_size() : 0;
    const StateLayout L(d, hsize);
    const RVector& m = sinit.packet().masses;
    const RVector w = m.cwiseInverse();
    const int vorder = std::max(2, hierarchy ? hierarchy->potential_order() : 2);
    const Complex s_init0 = sinit.value(x_start);

    CVector y = CVector::Zero(L.size);
    y.segment(0, d) = x_start;
    y.segment(L.iv, d) = sinit.velocity(x_start);
    Eigen::Map<CMatrix>(y.data() + L.iu, d, d) = CMatrix::Identity(d, d);
    Eigen::Map<CMatrix>(y.data() + L.iud, d, d) = w.cast<Complex>().asDiagonal() * sinit.hessian();
    std::vector<Complex> F, dF;
    if (hierarchy) {
        std::vector<std::vector<Complex>> tensors;
        for (int r = 0; r <= hierarchy->max_order(0); ++r) tensors.push_back(sinit.tensor(x_start, r));
        F = hierarchy->initial(tensors);
        for (int i = 0; i < hsize; ++i) y[L.ih + i] = F[i];
    }

    // Refreshes F from the state, with the derived chain-0 entries filled in.
    auto load_hierarchy = [&](const CVector& s) {
        for (int i = 0; i < hsize; ++i) F[i] = s[L.ih + i];
        const CVector mv = m.cast<Complex>().cwiseProduct(s.segment(L.iv, d));
        hierarchy->fill_classical(F, s_init0 + s[L.ia], mv);
    };

    auto rhs = [&](double, const CVector& s, CVector& ds) {
        ds.setZero(L.size);
        const CVector x = s.segment(0, d);
        const CVector v = s.segment(L.iv, d);
        const auto V = model.eval_derivs(x, vorder);
        ds.segment(0, d) = v;
        const CMatrix U = block(s, L.iu, d);
        CMatrix Udot;
        if (hierarchy) {
            load_hierarchy(s);
            hierarchy->rhs(F, V, dF);
            for (int i = 0; i < hsize; ++i) ds[L.ih + i] = dF[i];
            ds[L.ih + hierarchy->index(0, 0, 0)] = 0.0;
            for (int j = 0; j < d; ++j) ds[L.ih + hierarchy->index(0, 1, j)] = 0.0;
        }
        if (bomca) {
            for (int j = 0; j < d; ++j) ds[L.iv + j] = w[j] * dF[hierarchy->index(0, 1, j)];
            ds[L.ia] = dF[hierarchy->index(0, 0, 0)];
            Udot = w.cast<Complex>().asDiagonal() * hierarchy->s0_hessian(F) * U;
            Eigen::Map<CMatrix>(ds.data() + L.iu, d, d) = Udot;
        } else {
            const CVector g = V.gradient();
            Complex kin(0.0);
            for (int j = 0; j < d; ++j) {
                ds[L.iv + j] = -w[j] * g[j];
                kin += 0.5 * m[j] * v[j] * v[j];
            }
            ds[L.ia] = kin - V.value();
            Udot = block(s, L.iud, d);
            Eigen::Map<CMatrix>(ds.data() + L.iu, d, d) = Udot;
            Eigen::Map<CMatrix>(ds.data() + L.iud, d, d) = -(w.cast<Complex>().asDiagonal() * V.hessian()) * U;
        }
        ds[L.il] = U.partialPivLu().solve(Udot).trace();
    };

    FlowResult out;
    TrajectoryRecord& rec = out.record;
    rec.masses = m;
    const auto times = uniform_times(T, intervals);
    const std::size_t ns = times.size();
    rec.times = times;
    rec.x.resize(ns);
    rec.v.resize(ns);
    rec.action.resize(ns);
    rec.U.resize(ns);
    rec.Udot.resize(ns);
    rec.log_det_U.resize(ns);
    if (hierarchy) out.derivs.resize(ns);

    auto on_sample = [&](std::size_t k, double, const CVector& s) {
        rec.x[k] = s.segment(0, d);
        rec.v[k] = s.segment(L.iv, d);
        rec.action[k] = s[L.ia];
        rec.U[k] = block(s, L.iu, d);
        rec.log_det_U[k] = s[L.il];
        if (hierarchy) {
            load_hierarchy(s);
            out.derivs[k] = F;
        }
        if (bomca) {
            rec.Udot[k] = w.cast<Complex>().asDiagonal() * hierarchy->s0_hessian(F) * rec.U[k];
        } else {
            rec.Udot[k] = block(s, L.iud, d);
        }
    };
    double min_det = 1.0;
    auto on_step = [&](double t, const CVector& s) {
        min_det = std::min(min_det, std::abs(block(s, L.iu, d).determinant()));
        if (hierarchy) {
            for (int o = 0; o < layouts_for(d)[2].size(); ++o) {
                if (std::abs(s[L.ih + hierarchy->index(0, 2, o)]) > options.riccati_guard) {
                    throw Error(ErrorCode::RiccatiBlowup, "S0 second derivative exceeded guard at t=" + std::to_string(t));
                }
            }
        }
    };

    DormandPrince ode(options.ode);
    ode.integrate(rhs, y, times, on_sample, on_step);
    out.stats = ode.stats();
    for (const auto& U : rec.U) min_det = std::min(min_det, std::abs(U.determinant()));
    rec.min_abs_det_U = min_det;
    rec.caustic_flag = min_det < options.caustic_threshold;
    return out;
}

TrajectoryRecord integrate_classical(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                     double T, const DynamicsOptions& options) {
    return integrate_flow(x_start, model, sinit, T, nullptr, options, options.samples).record;
}

TrajectoryRecord integrate_classical(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                     double T, double tol) {
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    DynamicsOptions opt;
    opt.ode.rtol = tol;
    opt.ode.atol = tol * 1e-2;
    return integrate_classical(x_start, model, sinit, T, opt);
}

Branch shoot_for_target(const CVector& X, const CVector& guess, const PotentialModel& model, const SInit& sinit,
                        double T, const ShootingOptions& shooting, const DynamicsOptions& dynamics) {
    if (!all_finite(guess)) throw Error(ErrorCode::InvalidArgument, "guess is not finite");
    if (X.size() != guess.size()) throw Error(ErrorCode::DimensionMismatch, "target and guess dimensions differ");

    struct Eval {
        CVector xT;
        CMatrix U;
        double res;
    };
    auto evaluate = [&](const CVector& x0) -> std::optional<Eval> {
        try {
            auto f = integrate_flow(x0, model, sinit, T, nullptr, dynamics, 1);
            Eval e{f.record.x_end(), f.record.U.back(), 0.0};
            e.res = (e.xT - X).norm();
            if (!std::isfinite(e.res)) return std::nullopt;
            return e;
        } catch (const Error& err) {
            if (err.code() == ErrorCode::IntegrationFailure) return std::nullopt;
            throw;
        }
    };

    CVector x = guess;
    auto cur = evaluate(x);
    if (!cur) throw Error(ErrorCode::NoConvergence, "trajectory from the initial guess cannot be integrated");
    int it = 0;
    while (cur->res > shooting.tol) {
        if (it >= shooting.max_iterations) {
            throw Error(ErrorCode::NoConvergence,
                        "no convergence after " + std::to_string(it) + " iterations, residual " + std::to_string(cur->res));
        }
        ++it;
        if (std::abs(cur->U.determinant()) < shooting.singular_threshold) {
            throw Error(ErrorCode::SingularJacobian, "det U(T) vanishes at the current iterate");
        }
        const CVector step = cur->U.partialPivLu().solve(cur->xT - X);
        double lambda = 1.0;
        bool accepted = false;
        for (int h = 0; h <= shooting.max_halvings; ++h, lambda *= 0.5) {
            const CVector trial = x - lambda * step;
            auto next = evaluate(trial);
            if (next && next->res < cur->res) {
                x = trial;
                cur = std::move(next);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw Error(ErrorCode::NoConvergence, "damped Newton step failed to reduce residual " + std::to_string(cur->res));
        }
    }

    Branch b;
    b.x_start = x;
    b.residual = cur->res;
    b.iterations = it;
    if (shooting.dense_result) {
        b.trajectory = integrate_flow(x, model, sinit, T, nullptr, dynamics, dynamics.samples).record;
    }
    return b;
}

CVector free_particle_start(const CVector& X, const SInit& sinit, double T) {
    const auto& pk = sinit.packet();
    const int d = pk.dimension();
    const CMatrix W = pk.masses.cwiseInverse().cast<Complex>().asDiagonal();
    const CMatrix A = CMatrix::Identity(d, d) + T * W * sinit.hessian();
    const CVector rhs = X - T * W * pk.p0.cast<Complex>() + T * W * sinit.hessian() * pk.x0.cast<Complex>();
    return A.partialPivLu().solve(rhs);
}

std::vector<CVector> search_guesses(const CVector& X, const SInit& sinit, double T, const SearchOptions& options) {
    if (options.grid_n < 1) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 1");
    const int d = sinit.dimension();
    std::vector<CVector> out = options.warm_guesses;
    const CVector free = free_particle_start(X, sinit, T);
    if (options.free_guess) out.push_back(free);
    if (!options.lattice) return out;

    const auto& b = options.box;
    const int n = options.grid_n;
    const double dre = n > 1 ? (b.re_hi - b.re_lo) / (n - 1) : 0.0;
    const double dim_ = n > 1 ? (b.im_hi - b.im_lo) / (n - 1) : 0.0;
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const Complex center(0.5 * (b.re_lo + b.re_hi), 0.5 * (b.im_lo + b.im_hi));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double re = n > 1 ? b.re_lo + i * dre : 0.5 * (b.re_lo + b.re_hi);
            double im = n > 1 ? b.im_lo + j * dim_ : 0.5 * (b.im_lo + b.im_hi);
            if (options.jitter > 0.0) {
                re += options.jitter * dre * unif(rng);
                im += options.jitter * dim_ * unif(rng);
            }
            const Complex c(re, im);
            if (d == 1) {
                out.push_back(CVector::Constant(1, c));
            } else {
                // Box is read as offsets from the free-particle root, applied to every coordinate.
                out.push_back(free + CVector::Constant(d, c - center));
            }
        }
    }
    return out;
}

namespace {

bool lex_less(const CVector& a, const CVector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
        if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
    }
    return false;
}

}  // namespace

std::vector<CVector> dedup_starts(std::vector<CVector> starts, double tol) {
    std::sort(starts.begin(), starts.end(), lex_less);
    std::vector<CVector> kept;
    for (auto& s : starts) {
        bool dup = false;
        for (const auto& k : kept) {
            if ((k - s).norm() < tol) {
                dup = true;
                break;
            }
        }
        if (!dup) kept.push_back(std::move(s));
    }
    return kept;
}

std::vector<Branch> branch_search(const CVector& X, const PotentialModel& model, const SInit& sinit, double T,
                                  const SearchOptions& search, const ShootingOptions& shooting,
                                  const DynamicsOptions& dynamics, SearchStats* stats) {
    const auto guesses = search_guesses(X, sinit, T, search);
    std::vector<std::optional<CVector>> roots(guesses.size());
    std::vector<int> iters(guesses.size(), 0);
    ShootingOptions quick = shooting;
    quick.dense_result = false;
    parallel_for(guesses.size(), [&](std::size_t i) {
        try {
            auto b = shoot_for_target(X, guesses[i], model, sinit, T, quick, dynamics);
            roots[i] = std::move(b.x_start);
            iters[i] = b.iterations;
        } catch (const Error&) {
        }
    });
    std::vector<CVector> found;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (roots[i]) found.push_back(*roots[i]);
        if (stats) {
            ++stats->attempts;
            if (roots[i]) {
                ++stats->converged;
                stats->newton_iterations += iters[i];
            }
        }
    }
    found = dedup_starts(std::move(found), search.dedup_tol);
    std::stable_sort(found.begin(), found.end(), [](const CVector& a, const CVector& b) {
        return a.imag().norm() < b.imag().norm();
    });

    std::vector<Branch> out;
    out.reserve(found.size());
    for (const auto& s : found) {
        Branch b;
        b.x_start = s;
        b.trajectory = integrate_flow(s, model, sinit, T, nullptr, dynamics, dynamics.samples).record;
        b.residual = (b.trajectory.x_end() - X).norm();
        out.push_back(std::move(b));
    }
    return out;
}

namespace {

nlohmann::json complex_pair(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

nlohmann::json complex_vector(const CVector& v) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_pair(v[i]));
    return a;
}

nlohmann::json complex_matrix(const CMatrix& m) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_pair(m(i, j)));
        a.push_back(row);
    }
    return a;
}

}  // namespace

std::string trajectory_to_json(const TrajectoryRecord& rec, std::size_t stride) {
    stride = std::max<std::size_t>(stride, 1);
    nlohmann::json j;
    j["caustic_flag"] = rec.caustic_flag;
    j["min_abs_det_U"] = rec.min_abs_det_U;
    auto samples = nlohmann::json::array();
    for (std::size_t k = 0; k < rec.size(); k += stride) {
        samples.push_back({{"t", rec.times[k]},
                           {"x", complex_vector(rec.x[k])},
                           {"v", complex_vector(rec.v[k])},
                           {"action", complex_pair(rec.action[k])},
                           {"U", complex_matrix(rec.U[k])},
                           {"Udot", complex_matrix(rec.Udot[k])},
                           {"log_det_U", complex_pair(rec.log_det_U[k])}});
    }
    j["samples"] = std::move(samples);
    return j.dump();
}

}  // namespace ctraj
