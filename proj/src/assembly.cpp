#include "ctraj/assembly.hpp"
#include "ctraj/bomca.hpp"
#include "ctraj/parallel.hpp"
#include "ctraj/wkb.hpp"

#include <algorithm>

namespace ctraj {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Wkb: return "wkb";
        case Method::Bomca: return "bomca";
        case Method::ClassicalQ: return "classical_q";
    }
    return "?";
}

Method method_from_string(std::string_view s) {
    if (s == "wkb") return Method::Wkb;
    if (s == "bomca") return Method::Bomca;
    if (s == "classical_q") return Method::ClassicalQ;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

void check_capability(Method method, int n, int d) {
    bool ok = false;
    switch (method) {
        case Method::Wkb: ok = wkb_supported(n, d); break;
        case Method::Bomca: ok = bomca_supported(n, d); break;
        case Method::ClassicalQ: ok = d == 1 && n == 2; break;
    }
    if (!ok) {
        throw Error(ErrorCode::UnsupportedOrder, "method " + std::string(to_string(method)) + " with n=" +
                                                     std::to_string(n) + ", d=" + std::to_string(d) +
                                                     " is not implemented; supported:\n" + capability_matrix());
    }
}

std::string capability_matrix() {
    return "  wkb          n=1..3 for d=1; n=1..2 for d=2,3\n"
           "  bomca        n=1 for d=1..3; n=2 for d=1,2\n"
           "  classical_q  n=2, d=1\n";
}

int SemiclassicalField::newton_iterations() const {
    int s = 0;
    for (const auto& t : targets) s += t.search.newton_iterations;
    return s;
}

int SemiclassicalField::shooting_attempts() const {
    int s = 0;
    for (const auto& t : targets) s += t.search.attempts;
    return s;
}

void filter_branches(std::vector<BranchContribution>& branches, const SInit& sinit, double cutoff,
                     double caustic_threshold) {
    const double limit = cutoff * sinit.packet().max_abs();
    for (auto& b : branches) {
        if (b.classification == BranchClass::Duplicate) continue;
        if (std::abs(b.contribution) > limit || !std::isfinite(std::abs(b.contribution))) {
            b.classification = BranchClass::DiscardedLarge;
        } else if (std::abs(b.det_U) < caustic_threshold) {
            b.classification = BranchClass::CausticAdjacent;
        } else {
            b.classification = BranchClass::Contributing;
        }
    }
}

void resum(TargetResult& target) {
    target.total = Complex(0.0);
    target.empty = true;
    for (const auto& b : target.branches) {
        if (b.classification != BranchClass::Contributing) continue;
        target.total += b.contribution;
        target.empty = false;
    }
}

BranchContribution evaluate_branch(const Branch& branch, const CVector& X, const PotentialModel& model,
                                   const SInit& sinit, double T, const AssemblyOptions& options) {
    const double hbar = sinit.packet().hbar;
    BranchContribution out;
    out.x_start = branch.x_start;
    out.residual = branch.residual;
    out.iterations = branch.iterations;
    switch (options.method) {
        case Method::Wkb: {
            const auto st = evolve_wkb(branch, model, sinit, options.order, options.dynamics);
            out.contribution = wkb_wavefunction_branch(st, hbar);
            out.det_U = std::exp(branch.trajectory.log_det_U.back());
            break;
        }
        case Method::Bomca: {
            CVector start = branch.x_start;
            if (options.order > 1) {
                const auto bb = bomca_shoot(X, branch.x_start, model, sinit, options.order, T, options.shooting,
                                            options.dynamics);
                start = bb.x_start;
                out.residual = bb.residual;
                out.iterations += bb.iterations;
            }
            const auto run = evolve_bomca(start, model, sinit, options.order, T, options.dynamics, 1);
            out.x_start = start;
            out.contribution = bomca_wavefunction_branch(run.state, hbar);
            out.det_U = std::exp(run.flow.record.log_det_U.back());
            break;
        }
        case Method::ClassicalQ: {
            const auto res = classical_path_q_variant(branch, model, sinit, hbar, options.dynamics);
            out.contribution = res.psi;
            out.det_U = std::exp(branch.trajectory.log_det_U.back());
            break;
        }
    }
    return out;
}

namespace {

TargetResult solve_target(const RVector& Xr, const PotentialModel& model, const SInit& sinit, double T,
                          const AssemblyOptions& options, const SearchOptions& search) {
    TargetResult tr;
    tr.X = Xr;
    const CVector X = Xr.cast<Complex>();
    try {
        auto branches = branch_search(X, model, sinit, T, search, options.shooting, options.dynamics, &tr.search);
        int id = 0;
        for (const auto& b : branches) {
            try {
                auto c = evaluate_branch(b, X, model, sinit, T, options);
                c.branch_id = id++;
                tr.branches.push_back(std::move(c));
            } catch (const Error& e) {
                // A branch that cannot be evolved (blow-up, failed BOMCA shoot) is dropped.
                tr.error += (tr.error.empty() ? "" : "; ") + std::string(e.what());
            }
        }
        // BOMCA re-shooting can merge distinct classical starts.
        for (std::size_t i = 0; i < tr.branches.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (tr.branches[j].classification == BranchClass::Duplicate) continue;
                if ((tr.branches[i].x_start - tr.branches[j].x_start).norm() < search.dedup_tol) {
                    tr.branches[i].classification = BranchClass::Duplicate;
                    break;
                }
            }
        }
        filter_branches(tr.branches, sinit, options.cutoff, options.caustic_threshold);
    } catch (const Error& e) {
        tr.error = e.what();
    }
    resum(tr);
    return tr;
}

SemiclassicalField make_field(const SInit& sinit, double T, const AssemblyOptions& options, std::size_t n) {
    check_capability(options.method, options.order, sinit.dimension());
    SemiclassicalField f;
    f.method = options.method;
    f.order = options.order;
    f.hbar = sinit.packet().hbar;
    f.T = T;
    f.targets.resize(n);
    return f;
}

}  // namespace

SemiclassicalField assemble(const std::vector<RVector>& targets, const PotentialModel& model, const SInit& sinit,
                            double T, const AssemblyOptions& options) {
    auto field = make_field(sinit, T, options, targets.size());
    parallel_for(
        targets.size(),
        [&](std::size_t i) { field.targets[i] = solve_target(targets[i], model, sinit, T, options, options.search); },
        options.threads);
    return field;
}

SemiclassicalField branch_continuation(const std::vector<RVector>& targets, const PotentialModel& model,
                                       const SInit& sinit, double T, const AssemblyOptions& options,
                                       const SemiclassicalField* prior) {
    auto field = make_field(sinit, T, options, targets.size());
    const bool use_prior = prior && prior->targets.size() == targets.size();
    std::vector<CVector> previous;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        SearchOptions warm = options.search;
        warm.warm_guesses = previous;
        if (use_prior) {
            for (const auto& b : prior->targets[i].branches) warm.warm_guesses.push_back(b.x_start);
        }
        TargetResult tr;
        if (!warm.warm_guesses.empty()) {
            warm.lattice = false;
            tr = solve_target(targets[i], model, sinit, T, options, warm);
        }
        if (tr.branches.empty()) {
            const SearchStats spent = tr.search;
            tr = solve_target(targets[i], model, sinit, T, options, options.search);
            tr.search.attempts += spent.attempts;
            tr.search.newton_iterations += spent.newton_iterations;
        }
        previous.clear();
        // Warm starts must be classical roots; BOMCA-shifted starts are still good guesses.
        for (const auto& b : tr.branches) previous.push_back(b.x_start);
        field.targets[i] = std::move(tr);
    }
    return field;
}

std::vector<RVector> target_grid(const RVector& lo, const RVector& hi, const std::vector<int>& counts) {
    const int d = static_cast<int>(lo.size());
    if (hi.size() != d || static_cast<int>(counts.size()) != d) {
        throw Error(ErrorCode::DimensionMismatch, "target grid bounds and counts disagree in dimension");
    }
    std::size_t total = 1;
    for (int c : counts) {
        if (c < 1) throw Error(ErrorCode::InvalidArgument, "target grid needs at least one point per axis");
        total *= static_cast<std::size_t>(c);
    }
    std::vector<RVector> out;
    out.reserve(total);
    std::vector<int> idx(d, 0);
    for (std::size_t k = 0; k < total; ++k) {
        RVector x(d);
        for (int j = 0; j < d; ++j) {
            x[j] = counts[j] > 1 ? lo[j] + (hi[j] - lo[j]) * idx[j] / (counts[j] - 1) : lo[j];
        }
        out.push_back(std::move(x));
        for (int j = d - 1; j >= 0; --j) {
            if (++idx[j] < counts[j]) break;
            idx[j] = 0;
        }
    }
    return out;
}

}  // namespace ctraj
