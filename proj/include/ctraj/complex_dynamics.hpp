#pragma once

#include "ctraj/common.hpp"
#include "ctraj/hierarchy.hpp"
#include "ctraj/ode.hpp"
#include "ctraj/packet.hpp"
#include "ctraj/potential.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ctraj {

/// One complex trajectory sampled on a uniform time grid.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<CVector> x;
    std::vector<CVector> v;
    std::vector<Complex> action;  // S[x](t) = int_0^t (1/2 m v^2 - V) (plus hbar term for BOMCA)
    std::vector<CMatrix> U;
    std::vector<CMatrix> Udot;
    std::vector<Complex> log_det_U;  // continuous branch, 0 at t = 0
    bool caustic_flag = false;
    double min_abs_det_U = 1.0;
    RVector masses;

    std::size_t size() const { return times.size(); }
    double T() const { return times.empty() ? 0.0 : times.back(); }
    const CVector& x_start() const { return x.front(); }
    const CVector& x_end() const { return x.back(); }
    /// 1/2 sum m v^2 + V(x) at sample k.
    Complex energy(std::size_t k, const PotentialModel& model) const;
};

struct DynamicsOptions {
    OdeOptions ode;
    /// Number of uniform intervals in the dense record.
    std::size_t samples = 2000;
    double caustic_threshold = 1e-6;
    /// |S_0,xx| beyond this aborts with RiccatiBlowup.
    double riccati_guard = 1e12;
};

/// Trajectory plus the hierarchy state (flat layout of Hierarchy) per sample.
struct FlowResult {
    TrajectoryRecord record;
    std::vector<std::vector<Complex>> derivs;
    OdeStats stats;
};

/// Integrates x, v, action, U, log det U and optionally a derivative
/// hierarchy as one coupled system on [0, T] with `intervals` uniform samples.
/// With a BOMCA hierarchy the trajectory follows the corrected velocity field
/// and U solves M dU/dt = S'' U.
FlowResult integrate_flow(const CVector& x_start, const PotentialModel& model, const SInit& sinit, double T,
                          const Hierarchy* hierarchy, const DynamicsOptions& options, std::size_t intervals);

TrajectoryRecord integrate_classical(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                     double T, const DynamicsOptions& options = {});
TrajectoryRecord integrate_classical(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                     double T, double tol);

enum class BranchClass { Contributing, DiscardedLarge, CausticAdjacent, Duplicate };
std::string_view to_string(BranchClass c);

struct Branch {
    CVector x_start;
    double residual = 0.0;
    TrajectoryRecord trajectory;
    BranchClass classification = BranchClass::Contributing;
    Complex contribution{0.0, 0.0};
    int iterations = 0;
};

struct ShootingOptions {
    double tol = 1e-11;
    int max_iterations = 60;
    int max_halvings = 20;
    /// |det U(T)| below this makes the Newton step undefined.
    double singular_threshold = 1e-12;
    /// Skip the dense re-integration (search phase only needs x_start).
    bool dense_result = true;
};

/// Damped Newton on x(0) using U(T) as the Jacobian of x(0) -> x(T).
Branch shoot_for_target(const CVector& X, const CVector& guess, const PotentialModel& model, const SInit& sinit,
                        double T, const ShootingOptions& shooting = {}, const DynamicsOptions& dynamics = {});

struct SearchBox {
    double re_lo = -3.0, re_hi = 3.0;
    double im_lo = -3.0, im_hi = 3.0;
};

struct SearchOptions {
    SearchBox box;
    int grid_n = 5;
    double dedup_tol = 1e-7;
    /// Relative jitter of lattice points (0 disables); seeded for reproducibility.
    double jitter = 0.0;
    std::uint64_t seed = 0;
    /// Extra starting guesses tried before the lattice (e.g. from a neighbouring target).
    std::vector<CVector> warm_guesses;
    /// Include the exact free-particle root as a guess.
    bool free_guess = true;
    /// Off: only warm guesses and the free-particle root are tried.
    bool lattice = true;
};

/// Exact x(0) for V = 0: solves x0 + v(0; x0) T = X.
CVector free_particle_start(const CVector& X, const SInit& sinit, double T);

/// Lattice guesses for the search (deterministic order).
std::vector<CVector> search_guesses(const CVector& X, const SInit& sinit, double T, const SearchOptions& options);

struct SearchStats {
    int attempts = 0;
    int converged = 0;
    int newton_iterations = 0;  // summed over converged attempts
};

/// Multi-start shooting; distinct converged roots sorted by |Im x_start|.
std::vector<Branch> branch_search(const CVector& X, const PotentialModel& model, const SInit& sinit, double T,
                                  const SearchOptions& search = {}, const ShootingOptions& shooting = {},
                                  const DynamicsOptions& dynamics = {}, SearchStats* stats = nullptr);

/// Sorts (lexicographic on re/im) then drops entries within tol of a kept one.
std::vector<CVector> dedup_starts(std::vector<CVector> starts, double tol);

std::string trajectory_to_json(const TrajectoryRecord& record, std::size_t stride = 1);

}  // namespace ctraj
