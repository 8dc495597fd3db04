#include "ctraj/wkb.hpp"

namespace ctraj {

std::int64_t state_size(int n, int d) {
    if (n < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "state_size needs n >= 1 and d >= 1");
    std::int64_t total = 0;
    for (int i = 0; i <= 2 * n; i += 2) total += binomial(d + i, i);
    return total;
}

bool wkb_supported(int n, int d) { return n >= 1 && d >= 1 && d <= kMaxDim && (n <= 2 || (n == 3 && d == 1)); }

namespace {

WKBState extract_state(const Hierarchy& h, const FlowResult& flow, const SInit&) {
    WKBState st;
    st.order = h.order();
    st.dim = h.dim();
    st.T = flow.record.T();
    const auto& F = flow.derivs.back();
    const auto& lay = layouts_for(h.dim());
    st.derivs.resize(h.chains());
    for (int k = 0; k < h.chains(); ++k) {
        st.S.push_back(F[h.index(k, 0, 0)]);
        for (int r = 0; r <= h.max_order(k); ++r) {
            std::vector<Complex> t(lay[r].size());
            for (int o = 0; o < lay[r].size(); ++o) t[o] = F[h.index(k, r, o)];
            st.derivs[k].push_back(std::move(t));
        }
    }
    st.S1_from_log_det = 0.5 * kI * flow.record.log_det_U.back();
    st.scalar_count = h.scalar_count();
    return st;
}

}  // namespace

WKBRun evolve_wkb(const CVector& x_start, const PotentialModel& model, const SInit& sinit, int n, double T,
                  const DynamicsOptions& options, std::size_t intervals) {
    Hierarchy h = Hierarchy::wkb(n, sinit.packet().masses);
    auto flow = integrate_flow(x_start, model, sinit, T, &h, options, intervals == 0 ? options.samples : intervals);
    WKBState st = extract_state(h, flow, sinit);
    return {std::move(st), std::move(flow), std::move(h)};
}

WKBState evolve_wkb(const Branch& branch, const PotentialModel& model, const SInit& sinit, int n,
                    const DynamicsOptions& options) {
    const double T = branch.trajectory.size() ? branch.trajectory.T() : 0.0;
    return evolve_wkb(branch.x_start, model, sinit, n, T, options, 1).state;
}

Complex wkb_wavefunction_branch(const WKBState& state, double hbar) {
    Complex phase(0.0);
    double hp = 1.0 / hbar;
    for (const auto& s : state.S) {
        phase += s * hp;
        hp *= hbar;
    }
    return std::exp(kI * phase);
}

Complex classical_wavefunction(const TrajectoryRecord& rec, const SInit& sinit, double hbar) {
    const Complex s = sinit.value(rec.x_start()) + rec.action.back();
    return std::exp(kI * s / hbar - 0.5 * rec.log_det_U.back());
}

}  // namespace ctraj
