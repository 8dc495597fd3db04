#pragma once

#include "ctraj/assembly.hpp"
#include "ctraj/packet.hpp"
#include "ctraj/potential.hpp"

#include <string>
#include <vector>

namespace ctraj {

/// Periodic tensor grid, x_k = lo + k (hi - lo)/n, k = 0..n-1, per axis (1D or 2D).
struct GridSpec {
    RVector lo;
    RVector hi;
    std::vector<int> n;

    int dim() const { return static_cast<int>(n.size()); }
    double dx(int axis) const { return (hi[axis] - lo[axis]) / n[axis]; }
    std::vector<double> axis(int a) const;
    std::size_t size() const;
};

struct GridWaveFunction {
    GridSpec grid;
    std::vector<Complex> amp;  // row-major, last axis fastest
    double hbar = 1.0;
    RVector masses;
    double t = 0.0;
    RVector sigma;  // initial packet width per axis (boundary checks)

    double norm() const;  // discrete L2
};

/// Samples psi0 on the grid.  GridTooCoarse below 16 points per sigma,
/// PacketOutOfBounds unless x0 +- 5 sigma fits inside.
GridWaveFunction packet_on_grid(const GaussianPacket& packet, const GridSpec& grid);

/// Strang split-step Fourier propagation (half potential, kinetic, half potential).
/// BoundaryContamination if more than 1e-8 of the norm sits within 2 sigma of an edge.
GridWaveFunction split_step_propagate(GridWaveFunction psi, const PotentialModel& model, double T, int n_steps);

/// Band-limited (trigonometric) interpolation at a real point.
Complex interpolate(const GridWaveFunction& psi, const RVector& x);

/// <a|b> by the grid rectangle rule (spectrally accurate for decaying data).
Complex inner_product(const GridWaveFunction& a, const GridWaveFunction& b);

struct Comparison {
    double relative_L2 = 0.0;
    double max_pointwise = 0.0;  // absolute
    std::size_t used = 0;
    std::vector<std::size_t> excluded;     // empty, failed or caustic-adjacent targets
    std::vector<std::size_t> transitions;  // pointwise error above transition_threshold * max|psi| (kept in the error)
};

Comparison compare(const SemiclassicalField& field, const GridWaveFunction& psi, double transition_threshold = 0.05);
/// Plain reference values (closed forms, other fields) at the same targets.
Comparison compare(const SemiclassicalField& field, const std::vector<Complex>& reference,
                   double transition_threshold = 0.05);

/// Closed-form free evolution of the 1D nonnormalized packet.
Complex free_particle_exact(double X, const GaussianPacket& packet, double T);

/// Exact 1D harmonic evolution (V = k x^2/2) of a Gaussian, square root
/// continued along t from 0.
Complex harmonic_exact(double X, double k, const GaussianPacket& packet, double T);

/// Product of 1D harmonic closed forms for a separable packet (diagonal width)
/// in V = sum_i k_i x_i^2 / 2.
Complex harmonic_exact_separable(const RVector& X, const RVector& k, const GaussianPacket& packet, double T);

std::string grid_metadata_json(const GridWaveFunction& psi);
std::string grid_to_csv(const GridWaveFunction& psi);

}  // namespace ctraj
