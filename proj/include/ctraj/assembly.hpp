#pragma once

#include "ctraj/complex_dynamics.hpp"

#include <string>
#include <vector>

namespace ctraj {

enum class Method { Wkb, Bomca, ClassicalQ };
std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// Throws UnsupportedOrder for (method, n, d) outside the implemented range.
void check_capability(Method method, int n, int d);
/// Human-readable list of supported (method, n, d).
std::string capability_matrix();

struct BranchContribution {
    int branch_id = 0;
    CVector x_start;
    Complex contribution{0.0, 0.0};
    BranchClass classification = BranchClass::Contributing;
    double residual = 0.0;
    Complex det_U{1.0, 0.0};
    int iterations = 0;
};

struct TargetResult {
    RVector X;
    std::vector<BranchContribution> branches;
    Complex total{0.0, 0.0};
    /// No contributing branch: total is meaningless, not zero.
    bool empty = true;
    /// Set if the target failed as a whole (message kept, grid continues).
    std::string error;
    SearchStats search;
};

struct SemiclassicalField {
    Method method = Method::Wkb;
    int order = 1;
    double hbar = 1.0;
    double T = 0.0;
    std::vector<TargetResult> targets;

    int newton_iterations() const;
    int shooting_attempts() const;
};

struct AssemblyOptions {
    Method method = Method::Wkb;
    int order = 1;
    SearchOptions search;
    ShootingOptions shooting;
    DynamicsOptions dynamics;
    double cutoff = 10.0;
    double caustic_threshold = 1e-6;
    int threads = 0;
};

/// Classifies in place using each branch's contribution and det U(T):
/// |contribution| > cutoff max|psi0| -> DiscardedLarge, |det U(T)| below
/// threshold -> CausticAdjacent, otherwise Contributing.
void filter_branches(std::vector<BranchContribution>& branches, const SInit& sinit, double cutoff = 10.0,
                     double caustic_threshold = 1e-6);

/// Sum of contributing branches; sets total and empty.
void resum(TargetResult& target);

/// Per-branch wave function for a converged classical branch.
BranchContribution evaluate_branch(const Branch& branch, const CVector& X, const PotentialModel& model,
                                   const SInit& sinit, double T, const AssemblyOptions& options);

/// Cold assembly: independent branch search at every target (parallel over targets).
SemiclassicalField assemble(const std::vector<RVector>& targets, const PotentialModel& model, const SInit& sinit,
                            double T, const AssemblyOptions& options);

/// Sequential sweep along a path of targets; each target is first tried from
/// the previous target's starts (and the prior field's, when given) and falls
/// back to a cold search only if nothing converges.
SemiclassicalField branch_continuation(const std::vector<RVector>& targets, const PotentialModel& model,
                                       const SInit& sinit, double T, const AssemblyOptions& options,
                                       const SemiclassicalField* prior = nullptr);

/// Uniform 1D/2D/3D tensor grid of targets (row-major, last coordinate fastest).
std::vector<RVector> target_grid(const RVector& lo, const RVector& hi, const std::vector<int>& counts);

}  // namespace ctraj
