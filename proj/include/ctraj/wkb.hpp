#pragma once

#include "ctraj/complex_dynamics.hpp"
#include "ctraj/hierarchy.hpp"

#include <vector>

namespace ctraj {

/// D(n, d): number of functions in the order-n complex WKB hierarchy in d
/// dimensions, sum over even i <= 2n of C(d+i, i).
std::int64_t state_size(int n, int d);

/// Whether the WKB hierarchy of order n is implemented in dimension d.
bool wkb_supported(int n, int d);

struct WKBState {
    int order = 0;
    int dim = 0;
    double T = 0.0;
    /// S_0 .. S_n at T.  S_0 includes S_init(x(0)).
    std::vector<Complex> S;
    /// derivs[k][r]: symmetric order-r tensor of S_k at (x(T), T), r <= 2(n-k).
    std::vector<std::vector<std::vector<Complex>>> derivs;
    /// (i/2) log det U(T) from the Jacobi matrix, for cross-checking S_1.
    Complex S1_from_log_det{0.0, 0.0};
    int scalar_count = 0;
};

struct WKBRun {
    WKBState state;
    FlowResult flow;  // dense trajectory plus flat hierarchy samples
    Hierarchy hierarchy;
};

/// Integrates trajectory and hierarchy together from x_start.
WKBRun evolve_wkb(const CVector& x_start, const PotentialModel& model, const SInit& sinit, int n, double T,
                  const DynamicsOptions& options = {}, std::size_t intervals = 0);
WKBState evolve_wkb(const Branch& branch, const PotentialModel& model, const SInit& sinit, int n,
                    const DynamicsOptions& options = {});

/// exp(i sum_k S_k hbar^(k-1)).
Complex wkb_wavefunction_branch(const WKBState& state, double hbar);

/// Leading-order classical wave function exp(i(S_init(x(0)) + S[x])/hbar) / sqrt(det U(T))
/// on the continuously tracked branch of the square root.
Complex classical_wavefunction(const TrajectoryRecord& record, const SInit& sinit, double hbar);

}  // namespace ctraj
