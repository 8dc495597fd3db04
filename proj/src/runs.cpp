#include "ctraj/runs.hpp"

#include "ctraj/bomca.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace ctraj {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json cjson(Complex z) { return json::array({z.real(), z.imag()}); }

json cvec_json(const CVector& v) {
    auto a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(cjson(v[i]));
    return a;
}

json rvec_json(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json packet_json(const GaussianPacket& p) {
    json j;
    j["x0"] = rvec_json(p.x0);
    j["p0"] = rvec_json(p.p0);
    auto w = json::array();
    for (Eigen::Index i = 0; i < p.width.rows(); ++i) {
        auto row = json::array();
        for (Eigen::Index k = 0; k < p.width.cols(); ++k) row.push_back(cjson(p.width(i, k)));
        w.push_back(row);
    }
    j["omega"] = w;
    return j;
}

double relative(Complex a, Complex b) {
    const double scale = std::max(std::abs(b), 1e-300);
    return std::abs(a - b) / scale;
}

/// The branch the 1D checks run on.
Branch reference_branch(const RunConfig& c) {
    const GaussianPacket g = c.initial_packet();
    const SInit s(g);
    const RVector X = g.x0 + g.p0 * (c.T / c.mass);
    const auto o = c.assembly_options();
    auto branches = branch_search(X.cast<Complex>(), c.model(), s, c.T, o.search, o.shooting, o.dynamics);
    if (branches.empty())
        throw Error(ErrorCode::NoConvergence, "no branch reaches the reference point x0 + p0 T / m");
    return branches.front();
}

void require_1d(const RunConfig& c, const char* what) {
    if (c.dimension != 1) throw Error(ErrorCode::ConfigError, std::string(what) + " check is one-dimensional");
}

CheckReport report(std::string name, json params, double measured, double tolerance, bool passed) {
    return {std::move(name), params.dump(), measured, tolerance, passed};
}

void determinant_checks(const RunConfig& c, const Branch& b, std::vector<CheckReport>& out) {
    const SInit s(c.initial_packet());
    const auto o = c.dynamics_options();
    double e[3];
    const int Ns[3] = {64, 128, 256};
    Complex detU;
    for (int k = 0; k < 3; ++k) {
        const auto r = discrete_determinant(b.x_start, c.model(), s, c.T, Ns[k], o);
        e[k] = r.error;
        detU = r.det_U;
    }
    json p{{"N", {64, 128, 256}}, {"errors", {e[0], e[1], e[2]}}};
    // quadratic potentials with V'' = 0 give the determinant exactly at every N
    if (std::max({e[0], e[1], e[2]}) <= 1e-11 * std::max(1.0, std::abs(detU))) {
        out.push_back(report("determinant_exact", p, std::max({e[0], e[1], e[2]}), 1e-11, true));
        return;
    }
    const double order = std::log2(e[1] / e[2]);
    p["order"] = order;
    out.push_back(report("determinant_order", p, std::abs(order - 2.0), 0.3, std::abs(order - 2.0) <= 0.3));
}

void ainv_check(const RunConfig& c, const Branch& b, std::vector<CheckReport>& out) {
    const int N = 200, i = N / 4, j = N / 2;
    const auto r = inverse_limit_check(b.x_start, c.model(), SInit(c.initial_packet()), c.T, N, i, j,
                                       c.dynamics_options());
    json p{{"N", N}, {"i", i}, {"j", j}, {"discrete", cjson(r.discrete)}, {"continuum", cjson(r.continuum)}};
    out.push_back(report("inverse_limit", p, r.relative_error, 0.05, r.relative_error < 0.05));
}

void moment_checks(const RunConfig& c, std::vector<CheckReport>& out) {
    struct Case {
        std::string label;
        CMatrix A;
        int i, j;
    };
    std::vector<Case> cases;
    CMatrix hand(2, 2);
    hand << 2.0, -1.0, -1.0, 2.0;
    cases.push_back({"hand_2x2", hand, 0, 1});
    if (c.dimension == 1 && c.T > 0.0) {
        try {
            const auto A = path_matrix(reference_branch(c).x_start, c.model(), SInit(c.initial_packet()), c.T, 3,
                                       c.dynamics_options())
                               .dense();
            // the rotated-contour oracle needs Re A positive definite
            if (Eigen::SelfAdjointEigenSolver<RMatrix>(A.real()).eigenvalues().minCoeff() > 0.0)
                cases.push_back({"path_3x3", A, 2, 0});
        } catch (const Error&) {
        }
    }
    const std::pair<MomentPattern, const char*> patterns[] = {
        {MomentPattern::I4, "i4"}, {MomentPattern::I3J3, "i3j3"}, {MomentPattern::IJ, "ij"}, {MomentPattern::I3J, "i3j"}};
    for (const auto& cs : cases) {
        double worst = 0.0;
        json vals = json::object();
        for (const auto& [pat, name] : patterns) {
            const Complex closed = gaussian_moment(cs.A, pat, cs.i, cs.j);
            const Complex brute = gaussian_moment_quadrature(cs.A, pat, cs.i, cs.j);
            const double err = std::abs(closed - brute) / std::max(std::abs(closed), 1e-12);
            worst = std::max(worst, err);
            vals[name] = {{"closed_form", cjson(closed)}, {"quadrature", cjson(brute)}};
        }
        out.push_back(report("moments_" + cs.label, {{"i", cs.i}, {"j", cs.j}, {"values", vals}}, worst, 1e-6,
                             worst < 1e-6));
    }
}

void foc1_check(const RunConfig& c, const Branch& b, std::vector<CheckReport>& out) {
    try {
        const auto f = first_order_factor(b.x_start, c.model(), SInit(c.initial_packet()), c.T, c.hbar,
                                          c.dynamics_options());
        json p{{"factor", cjson(f.factor)},
               {"S2_paths", cjson(f.S2_paths)},
               {"S2_hierarchy", cjson(f.S2_hierarchy)},
               {"S2_nested", cjson(f.S2_nested)},
               {"quadrature_error", f.quadrature_error}};
        out.push_back(report("foc1", p, f.relative_error, 1e-4, f.relative_error < 1e-4));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::QuadratureFailure) throw;
        out.push_back(report("foc1", {{"error", e.what()}}, INFINITY, 1e-4, false));
    }
}

void stirling_checks(std::vector<CheckReport>& out) {
    double worst = 0.0;
    for (double n : {2.0, 10.0, 50.0, 1000.0}) {
        const auto r = stirling_modified(n, n, n);
        worst = std::max(worst, std::abs(r.correction * 12.0 * n - 1.0));
    }
    out.push_back(report("stirling_leading_coefficient", {{"n", {2, 10, 50, 1000}}}, worst, 1e-12, worst < 1e-12));

    double ratio = 0.0;
    for (double n : {5.0, 10.0, 20.0}) {
        const auto r = stirling_modified(n, n, n);
        ratio = std::max(ratio, r.corrected_error / r.leading_error);
    }
    out.push_back(report("stirling_corrected_beats_leading", {{"n", {5, 10, 20}}}, ratio, 1.0, ratio < 1.0));

    // shifted parameters: the corrected value stays second order in 1/n
    double dev = 0.0;
    for (auto [c1, c2] : {std::pair{1.0, -2.0}, std::pair{-2.0, 2.0}, std::pair{2.0, 1.0}}) {
        const double n = 200.0;
        const double e1 = stirling_modified(n, n + c1, n + c2).corrected_error;
        const double e2 = stirling_modified(2 * n, 2 * n + c1, 2 * n + c2).corrected_error;
        dev = std::max(dev, std::abs(e1 / e2 / 4.0 - 1.0));
    }
    out.push_back(report("stirling_shifted_second_order", {{"n", 200}, {"shifts", {{1, -2}, {-2, 2}, {2, 1}}}}, dev,
                         0.2, dev < 0.2));
}

void fsubst_check(const RunConfig& c, const Branch& b, std::vector<CheckReport>& out) {
    const auto run = evolve_bomca(b.x_start, c.model(), SInit(c.initial_packet()), 2, c.T, c.dynamics_options(),
                                  static_cast<std::size_t>(c.samples));
    const auto r = measure_f_representation(run, c.model());
    json p{{"zzz4_residual", r.zzz4_residual},
           {"fourth_residual", r.fourth_residual},
           {"f_equation_residual", r.f_equation_residual},
           {"q_consistency", r.q_consistency},
           {"K", cjson(r.K)},
           {"L", cjson(r.L)}};
    const double m = r.max_residual();
    out.push_back(report("fsubst", p, m, 1e-6, m < 1e-6));
}

}  // namespace

SemiclassicalField run_propagate(const RunConfig& c) {
    const auto opts = c.assembly_options();
    const SInit s(c.initial_packet());
    if (c.continuation) return branch_continuation(c.targets(), c.model(), s, c.T, opts);
    return assemble(c.targets(), c.model(), s, c.T, opts);
}

std::string field_to_csv(const SemiclassicalField& field) {
    const int d = field.targets.empty() ? 1 : static_cast<int>(field.targets.front().X.size());
    std::ostringstream out;
    for (int i = 0; i < d; ++i) out << "X" << i + 1 << ",";
    out << "branch,";
    for (int i = 0; i < d; ++i) out << "x_start_re" << i + 1 << ",x_start_im" << i + 1 << ",";
    out << "psi_re,psi_im,classification\n";
    for (const auto& t : field.targets) {
        std::string X;
        for (int i = 0; i < d; ++i) X += fmt(t.X[i]) + ",";
        for (const auto& b : t.branches) {
            out << X << b.branch_id << ",";
            for (int i = 0; i < d; ++i) out << fmt(b.x_start[i].real()) << "," << fmt(b.x_start[i].imag()) << ",";
            out << fmt(b.contribution.real()) << "," << fmt(b.contribution.imag()) << ","
                << to_string(b.classification) << "\n";
        }
        out << X << "total,";
        for (int i = 0; i < d; ++i) out << ",,";
        out << fmt(t.total.real()) << "," << fmt(t.total.imag()) << ","
            << (!t.error.empty() ? "error" : t.empty ? "empty" : "ok") << "\n";
    }
    return out.str();
}

CompareOutput run_compare(const RunConfig& c) {
    if (c.dimension > 2) throw Error(ErrorCode::ConfigError, "the grid oracle is limited to d <= 2");
    CompareOutput out;
    out.field = run_propagate(c);
    out.oracle = split_step_propagate(packet_on_grid(c.initial_packet(), c.oracle_grid()), c.model(), c.T,
                                      c.oracle_steps);
    out.comparison = compare(out.field, out.oracle, c.transition_threshold);
    return out;
}

std::string compare_to_json(const RunConfig& c, const CompareOutput& out) {
    const auto& cmp = out.comparison;
    json j;
    j["method"] = std::string(to_string(c.method));
    j["order"] = c.order;
    j["hbar"] = c.hbar;
    j["T"] = c.T;
    j["potential"] = c.potential;
    j["targets"] = out.field.targets.size();
    j["relative_L2"] = cmp.relative_L2;
    j["max_pointwise"] = cmp.max_pointwise;
    j["used"] = cmp.used;
    j["excluded_targets"] = cmp.excluded;
    j["transition_targets"] = cmp.transitions;
    j["newton_iterations"] = out.field.newton_iterations();
    j["shooting_attempts"] = out.field.shooting_attempts();
    j["oracle_grid"] = json::parse(grid_metadata_json(out.oracle));
    return j.dump(2) + "\n";
}

CheckSelector check_selector_from_string(std::string_view s) {
    if (s == "determinant") return CheckSelector::Determinant;
    if (s == "ainv") return CheckSelector::Ainv;
    if (s == "moments") return CheckSelector::Moments;
    if (s == "foc1") return CheckSelector::Foc1;
    if (s == "stirling") return CheckSelector::Stirling;
    if (s == "fsubst") return CheckSelector::Fsubst;
    if (s == "all") return CheckSelector::All;
    throw Error(ErrorCode::ConfigError, "unknown check '" + std::string(s) +
                                            "' (determinant, ainv, moments, foc1, stirling, fsubst, all)");
}

std::vector<CheckReport> run_checks(const RunConfig& c, CheckSelector sel) {
    const bool all = sel == CheckSelector::All;
    const bool one_d = c.dimension == 1;
    std::vector<CheckReport> out;
    auto wants = [&](CheckSelector s, const char* name, bool needs_1d) {
        if (sel == s && needs_1d) require_1d(c, name);
        return sel == s || (all && (!needs_1d || one_d));
    };
    std::optional<Branch> branch;
    auto ref = [&]() -> const Branch& {
        if (!branch) branch = reference_branch(c);
        return *branch;
    };
    if (wants(CheckSelector::Determinant, "determinant", true)) determinant_checks(c, ref(), out);
    if (wants(CheckSelector::Ainv, "ainv", true)) ainv_check(c, ref(), out);
    if (wants(CheckSelector::Moments, "moments", false)) moment_checks(c, out);
    if (wants(CheckSelector::Foc1, "foc1", true)) foc1_check(c, ref(), out);
    if (wants(CheckSelector::Stirling, "stirling", false)) stirling_checks(out);
    if (wants(CheckSelector::Fsubst, "fsubst", true)) fsubst_check(c, ref(), out);
    return out;
}

PropagatorOutput run_propagator(const RunConfig& c) {
    PropagatorOutput out;
    out.query.initial = c.initial_packet();
    out.query.final = c.final_packet_or_throw();
    out.query.T = c.T;
    out.query.model = c.model();
    const auto o = c.assembly_options();
    out.branches = two_sided_search(out.query, o.search, o.shooting, o.dynamics);
    out.overlap = coherent_overlap(out.query, out.branches);
    if (c.dimension == 1 && c.model().kind() == PotentialKind::Free) {
        out.closed_form = free_particle_overlap_exact(out.query);
        out.exponent = free_particle_overlap_exponent(out.query);
    }
    if (c.oracle_enabled) {
        const auto grid = c.oracle_grid();
        const auto psi = split_step_propagate(packet_on_grid(out.query.initial, grid), out.query.model, c.T,
                                              c.oracle_steps);
        out.oracle = inner_product(packet_on_grid(out.query.final, grid), psi);
    }
    return out;
}

std::string propagator_to_json(const PropagatorOutput& out) {
    json j;
    j["query"] = {{"initial", packet_json(out.query.initial)},
                  {"final", packet_json(out.query.final)},
                  {"T", out.query.T},
                  {"potential", std::string(to_string(out.query.model.kind()))},
                  {"hbar", out.query.initial.hbar},
                  {"mass", out.query.initial.mass()}};
    j["P_raw"] = cjson(out.overlap.P);
    j["P_normalized"] = cjson(out.overlap.P_normalized);
    j["branch_count"] = out.overlap.branches;
    auto arr = json::array();
    for (const auto& b : out.branches) {
        arr.push_back({{"x_start", cvec_json(b.x_start)},
                       {"residual", b.residual},
                       {"iterations", b.iterations},
                       {"wronskian_drift", b.wronskian_drift},
                       {"log_det", cjson(b.log_det)},
                       {"contribution", cjson(b.contribution)}});
    }
    j["branches"] = arr;
    if (out.closed_form) {
        j["closed_form"] = cjson(*out.closed_form);
        j["closed_form_relative_error"] = relative(out.overlap.P, *out.closed_form);
        j["exponent_factor"] = cjson(*out.exponent);
        j["exponent_modulus_minus_one"] = std::abs(*out.exponent) - 1.0;
    }
    if (out.oracle) {
        j["oracle_inner_product"] = cjson(*out.oracle);
        j["oracle_relative_error"] = relative(out.overlap.P, *out.oracle);
    }
    return j.dump(2) + "\n";
}

std::string branches_to_json(const SemiclassicalField& field) {
    json j;
    j["method"] = std::string(to_string(field.method));
    j["order"] = field.order;
    j["hbar"] = field.hbar;
    j["T"] = field.T;
    auto targets = json::array();
    for (const auto& t : field.targets) {
        json tj;
        tj["X"] = rvec_json(t.X);
        tj["attempts"] = t.search.attempts;
        tj["converged"] = t.search.converged;
        tj["newton_iterations"] = t.search.newton_iterations;
        tj["empty"] = t.empty;
        if (!t.error.empty()) tj["error"] = t.error;
        tj["total"] = cjson(t.total);
        auto bs = json::array();
        for (const auto& b : t.branches) {
            bs.push_back({{"id", b.branch_id},
                          {"x_start", cvec_json(b.x_start)},
                          {"residual", b.residual},
                          {"iterations", b.iterations},
                          {"det_U", cjson(b.det_U)},
                          {"contribution", cjson(b.contribution)},
                          {"classification", std::string(to_string(b.classification))}});
        }
        tj["branches"] = bs;
        targets.push_back(tj);
    }
    j["targets"] = targets;
    return j.dump(2) + "\n";
}

}  // namespace ctraj
