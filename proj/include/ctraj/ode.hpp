#pragma once

#include "ctraj/common.hpp"

#include <cstddef>
#include <functional>
#include <span>

namespace ctraj {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0: automatic
    double max_step = 0.0;      // 0: unbounded
    std::size_t max_steps = 2'000'000;
    /// Components are treated as diverged once any modulus exceeds this.
    double overflow = 1e14;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

using OdeRhs = std::function<void(double t, const CVector& y, CVector& dydt)>;
/// Called at t0 and after every accepted step; may throw to abort.
using OdeStepObserver = std::function<void(double t, const CVector& y)>;
/// Called at every requested output time.  Interior times use the dense
/// (continuous) extension, so sampling does not change the step sequence.
using OdeSampleObserver = std::function<void(std::size_t index, double t, const CVector& y)>;

/// Adaptive embedded Runge-Kutta 5(4) pair (Dormand-Prince) for complex
/// systems.  The error norm treats real and imaginary parts as separate
/// components.  Only the final time is hit exactly.
class DormandPrince {
public:
    explicit DormandPrince(OdeOptions options = {}) : opt_(options) {}

    /// Integrates from t0 to the last entry of `sample_times` (which must be
    /// increasing and start at t0).  Returns y at the final time.
    CVector integrate(const OdeRhs& rhs, CVector y0, std::span<const double> sample_times,
                      const OdeSampleObserver& on_sample, const OdeStepObserver& on_step = {});

    const OdeStats& stats() const { return stats_; }

private:
    double initial_step(const OdeRhs& rhs, double t0, const CVector& y0, const CVector& f0, double span) const;
    double error_norm(const CVector& y0, const CVector& y1, const CVector& err) const;

    OdeOptions opt_;
    OdeStats stats_;
};

/// n+1 uniformly spaced times on [0, T].
std::vector<double> uniform_times(double T, std::size_t intervals);

}  // namespace ctraj
