#pragma once

#include "ctraj/complex_dynamics.hpp"

#include <vector>

namespace ctraj {

/// Overlap <psi_f | psi(T)> of an evolved Gaussian with a target Gaussian.
/// Both packets share hbar, the (scalar) mass and the dimension.
struct PropagatorQuery {
    GaussianPacket initial;
    GaussianPacket final;
    double T = 0.0;
    PotentialModel model = PotentialModel::free(1);
};

struct TwoSidedBranch {
    CVector x_start;
    double residual = 0.0;
    int iterations = 0;
    TrajectoryRecord trajectory;
    /// Jacobi solutions with U1(0) = I, U1'(0) = 0 and U2(0) = 0, U2'(0) = I.
    CMatrix U1, U1dot, U2, U2dot;
    /// max_t |W(t) - W(0)| for W = U1'^T U2 - U1^T U2'.
    double wronskian_drift = 0.0;
    /// log det(U1' + i U2' Om_i + i Om_f* U1 - Om_f* U2 Om_i) at T, continued from t = 0.
    Complex log_det{0.0, 0.0};
    Complex contribution{0.0, 0.0};
};

/// Newton on x(0) for  m x'(T) = p_f - i m Om_f* (x(T) - x_f); the initial
/// condition m x'(0) = p_i + i m Om_i (x(0) - x_i) is built in.
TwoSidedBranch solve_two_sided(const PropagatorQuery& query, const CVector& guess,
                               const ShootingOptions& shooting = {}, const DynamicsOptions& dynamics = {});

/// Lattice multi-start around the affine (free-particle) root; distinct roots.
std::vector<TwoSidedBranch> two_sided_search(const PropagatorQuery& query, const SearchOptions& search = {},
                                             const ShootingOptions& shooting = {},
                                             const DynamicsOptions& dynamics = {});

struct OverlapResult {
    Complex P{0.0, 0.0};
    Complex P_normalized{0.0, 0.0};  // P / (|psi_i| |psi_f|)
    std::size_t branches = 0;
};

/// Branch sum of the leading-order overlap; CausticAtT if a determinant vanishes.
OverlapResult coherent_overlap(const PropagatorQuery& query, std::vector<TwoSidedBranch>& branches,
                               double caustic_threshold = 1e-10);

/// Printed closed form for the free particle in one dimension.
Complex free_particle_overlap_exact(const PropagatorQuery& query);

/// exp(-(p_i-p_f)^2 ... ) exponential factor of the closed form alone.
Complex free_particle_overlap_exponent(const PropagatorQuery& query);

}  // namespace ctraj
